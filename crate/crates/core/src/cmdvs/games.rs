//! Executable security experiments with scripted adversaries.
//!
//! The challenger runs `Setup`, exposes the key-generation and signing
//! oracles, and judges the adversary's output `(D*, m*, sigma*)`:
//!
//! * unforgeability: wins iff `(D*, m*)` was never submitted to the signing
//!   oracle and some `id* in D*` accepts `(m*, sigma*)`;
//! * consistency: wins iff some `id in D*` accepts and some other
//!   `id* in D*` rejects.
//!
//! Both conditions are evaluated literally. Since verification never sees
//! `D*`, an adversary that replays an untouched signature under a different
//! claimed set overlapping the real one would "win" trivially; the canned
//! strategies below always claim the set their signature was actually built
//! for, extended (unforgeability only) by one outsider whose acceptance would
//! be a genuine forgery.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::amq::BloomFilter;

use super::{
    keygen, setup, sign, verify_encoded, CmdvsError, CmdvsSignature, Mode, PublicParams, SetupConfig,
    SigningKey, VerificationKey,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Adversary {
    /// Resubmits a signature exactly as received.
    Replay,
    /// Flips one uniformly chosen bit of the encoded signature.
    BitFlip,
    /// Rebuilds the designated structure for a different set from public
    /// verification keys, keeping the original DS signature.
    SetSwap,
    /// Presents a signature with a message it was never issued for.
    MessageSwap,
    /// Changes the probe count `k` (generic) or the identity count (trivial).
    AuxTamper,
}

impl Adversary {
    pub const ALL: [Adversary; 5] =
        [Adversary::Replay, Adversary::BitFlip, Adversary::SetSwap, Adversary::MessageSwap, Adversary::AuxTamper];

    pub fn name(self) -> &'static str {
        match self {
            Adversary::Replay => "replay",
            Adversary::BitFlip => "bit-flip",
            Adversary::SetSwap => "set-swap",
            Adversary::MessageSwap => "message-swap",
            Adversary::AuxTamper => "aux-tamper",
        }
    }
}

#[derive(Clone, Debug)]
pub struct GameConfig {
    pub setup: SetupConfig,
    pub lambda: u32,
    /// Identities the adversary registers through the key oracle.
    pub population: usize,
    /// Largest designated set the adversary asks to be signed.
    pub max_designated: usize,
    pub seed: u64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig { setup: SetupConfig::default(), lambda: 10, population: 32, max_designated: 8, seed: 0 }
    }
}

/// What the adversary hands back.
#[derive(Clone, Debug)]
pub struct Forgery {
    pub designated: Vec<u64>,
    pub msg: Vec<u8>,
    pub sigma: Vec<u8>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Goal {
    Unforgeability,
    Consistency,
}

/// Challenger state plus the two oracles.
pub struct Challenger {
    pp: PublicParams,
    sk: SigningKey,
    vk_list: BTreeMap<u64, VerificationKey>,
    queries: HashSet<(Vec<u64>, Vec<u8>)>,
    lambda: u32,
}

impl Challenger {
    pub fn new(config: &SetupConfig, seed: &[u8; 32], lambda: u32) -> Result<Self, CmdvsError> {
        let (pp, sk) = setup(config, seed)?;
        Ok(Challenger { pp, sk, vk_list: BTreeMap::new(), queries: HashSet::new(), lambda })
    }

    pub fn pp(&self) -> &PublicParams {
        &self.pp
    }

    pub fn keygen_oracle(&mut self, id: u64) -> VerificationKey {
        let vrk = keygen(&self.pp, &mut self.sk, id);
        self.vk_list.insert(id, vrk.clone());
        vrk
    }

    pub fn sign_oracle(&mut self, designated: &[u64], msg: &[u8], max_bits: u64) -> Option<CmdvsSignature> {
        let sigma = sign(&self.sk, designated, msg, max_bits, self.lambda).ok()??;
        self.queries.insert((canonical(designated), msg.to_vec()));
        Some(sigma)
    }

    fn was_queried(&self, designated: &[u64], msg: &[u8]) -> bool {
        self.queries.contains(&(canonical(designated), msg.to_vec()))
    }

    fn accepts(&mut self, id: u64, msg: &[u8], sigma: &[u8]) -> bool {
        // Keys for identities the adversary never registered are still
        // well defined; the challenger derives them on demand.
        let vrk = match self.vk_list.get(&id) {
            Some(v) => v.clone(),
            None => super::verification_key(&self.sk, id),
        };
        verify_encoded(&self.pp, &vrk, msg, sigma)
    }
}

fn canonical(ids: &[u64]) -> Vec<u64> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn random_msg(rng: &mut ChaCha20Rng) -> Vec<u8> {
    let mut m = vec![0u8; 32];
    rng.fill(&mut m[..]);
    m
}

impl Adversary {
    fn forge(self, goal: Goal, ch: &mut Challenger, cfg: &GameConfig, rng: &mut ChaCha20Rng) -> Forgery {
        let population: Vec<u64> = (0..cfg.population.max(2)).map(|_| rng.gen()).collect();
        let vrks: Vec<VerificationKey> = population.iter().map(|&id| ch.keygen_oracle(id)).collect();
        let size = rng.gen_range(1..=cfg.max_designated.clamp(1, population.len() - 1));
        let mut shuffled = population.clone();
        shuffled.shuffle(rng);
        let designated: Vec<u64> = shuffled[..size].to_vec();
        let outsider = shuffled[size];
        let msg = random_msg(rng);
        let sigma = ch
            .sign_oracle(&designated, &msg, u64::MAX)
            .expect("unbounded length never fails");
        let mut bytes = sigma.encode();

        let claim_with_outsider = |set: &[u64]| {
            let mut s = set.to_vec();
            if goal == Goal::Unforgeability {
                s.push(outsider);
            }
            s
        };

        match self {
            Adversary::Replay => Forgery { designated, msg, sigma: bytes },
            Adversary::BitFlip => {
                let bit = rng.gen_range(0..bytes.len() * 8);
                bytes[bit / 8] ^= 1 << (bit % 8);
                Forgery { designated: claim_with_outsider(&designated), msg, sigma: bytes }
            }
            Adversary::MessageSwap => {
                let other = loop {
                    let m = random_msg(rng);
                    if m != msg {
                        break m;
                    }
                };
                Forgery { designated: claim_with_outsider(&designated), msg: other, sigma: bytes }
            }
            Adversary::AuxTamper => {
                match ch.pp().mode {
                    // k sits right after the 4-byte m.
                    Mode::Generic => bytes[4] = bytes[4].wrapping_add(rng.gen_range(1..=255)),
                    Mode::Trivial => bytes[3] = bytes[3].wrapping_add(rng.gen_range(1..=255)),
                }
                Forgery { designated: claim_with_outsider(&designated), msg, sigma: bytes }
            }
            Adversary::SetSwap => {
                // Drop one designated identity, add the outsider.
                let mut swapped = designated.clone();
                let victim = rng.gen_range(0..swapped.len());
                swapped[victim] = outsider;
                let forged = match &sigma {
                    CmdvsSignature::Generic { filter, ds_sig } => {
                        let mut f = BloomFilter::new(filter.m(), filter.k()).expect("valid shape");
                        for id in &swapped {
                            let i = population.iter().position(|p| p == id).unwrap();
                            if let VerificationKey::Generic { pairs, .. } = &vrks[i] {
                                for &p in pairs {
                                    f.insert_pair(p, ch.pp().probing);
                                }
                            }
                        }
                        CmdvsSignature::Generic { filter: f, ds_sig: ds_sig.clone() }
                    }
                    CmdvsSignature::Trivial { ds_sig, .. } => {
                        CmdvsSignature::Trivial { designated: canonical(&swapped), ds_sig: ds_sig.clone() }
                    }
                };
                Forgery { designated: swapped, msg, sigma: forged.encode() }
            }
        }
    }
}

fn trial_seed(base: u64, adversary: Adversary, trial: u64) -> [u8; 32] {
    let mut rng = ChaCha20Rng::seed_from_u64(base ^ (adversary as u64) << 56 ^ trial);
    rng.gen()
}

/// Runs `trials` independent unforgeability experiments and returns the
/// number the adversary won.
pub fn run_unforgeability_game(adversary: Adversary, trials: u64, cfg: &GameConfig) -> Result<u64, CmdvsError> {
    let mut wins = 0;
    for t in 0..trials {
        let seed = trial_seed(cfg.seed, adversary, t);
        let mut ch = Challenger::new(&cfg.setup, &seed, cfg.lambda)?;
        let mut rng = ChaCha20Rng::from_seed(seed);
        let f = adversary.forge(Goal::Unforgeability, &mut ch, cfg, &mut rng);
        if ch.was_queried(&f.designated, &f.msg) {
            continue;
        }
        if canonical(&f.designated).into_iter().any(|id| ch.accepts(id, &f.msg, &f.sigma)) {
            wins += 1;
        }
    }
    Ok(wins)
}

/// Runs `trials` independent consistency experiments and returns the number
/// the adversary won.
pub fn run_consistency_game(adversary: Adversary, trials: u64, cfg: &GameConfig) -> Result<u64, CmdvsError> {
    let mut wins = 0;
    for t in 0..trials {
        let seed = trial_seed(cfg.seed.wrapping_add(1), adversary, t);
        let mut ch = Challenger::new(&cfg.setup, &seed, cfg.lambda)?;
        let mut rng = ChaCha20Rng::from_seed(seed);
        let f = adversary.forge(Goal::Consistency, &mut ch, cfg, &mut rng);
        let results: Vec<bool> =
            canonical(&f.designated).into_iter().map(|id| ch.accepts(id, &f.msg, &f.sigma)).collect();
        if results.iter().any(|&a| a) && results.iter().any(|&a| !a) {
            wins += 1;
        }
    }
    Ok(wins)
}

/// How the second set of each pair is drawn in [`conflict_test`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConflictSampling {
    /// Two independent random sets (retried until distinct).
    Independent,
    /// The second set differs from the first in exactly one identity.
    OneSwap,
    /// The second set equals the first; every pair must collide.
    Identical,
}

/// Signs pairs of designated sets under one key and counts pairs whose
/// filters (slots and `k`) coincide.
pub fn conflict_test(
    ell: u32,
    lambda: u32,
    trials: u64,
    sampling: ConflictSampling,
    seed: u64,
) -> Result<u64, CmdvsError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let setup_seed: [u8; 32] = rng.gen();
    let (_, sk) = setup(&SetupConfig::generic(ell), &setup_seed)?;
    let msg = b"conflict";
    let mut collisions = 0;
    for _ in 0..trials {
        let size = rng.gen_range(1..=8usize);
        let a: Vec<u64> = (0..size).map(|_| rng.gen()).collect();
        let b: Vec<u64> = match sampling {
            ConflictSampling::Identical => a.clone(),
            ConflictSampling::OneSwap => {
                let mut b = a.clone();
                let i = rng.gen_range(0..size);
                b[i] = loop {
                    let x: u64 = rng.gen();
                    if !a.contains(&x) {
                        break x;
                    }
                };
                b
            }
            ConflictSampling::Independent => loop {
                let other = rng.gen_range(1..=8usize);
                let b: Vec<u64> = (0..other).map(|_| rng.gen()).collect();
                if canonical(&b) != canonical(&a) {
                    break b;
                }
            },
        };
        let sa = sign(&sk, &a, msg, u64::MAX, lambda)?.expect("unbounded");
        let sb = sign(&sk, &b, msg, u64::MAX, lambda)?.expect("unbounded");
        if let (CmdvsSignature::Generic { filter: fa, .. }, CmdvsSignature::Generic { filter: fb, .. }) = (&sa, &sb) {
            if fa == fb {
                collisions += 1;
            }
        }
    }
    Ok(collisions)
}
