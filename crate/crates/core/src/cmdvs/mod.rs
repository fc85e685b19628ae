//! Centralized multi-designated verifier signatures.
//!
//! One signer, many verifiers. A signature names a designated set `D` of
//! 64-bit identities; a verifier holding the key for `id` accepts only if
//! `id` is (or, with probability at most `2^-lambda`, looks like) a member.
//!
//! Two modes:
//!
//! * **Generic**: `D` is compressed into a Bloom filter. Each identity owns
//!   `ell` universe elements ([`assign`]); their hash pairs are precomputed
//!   into the verification key, so verifiers never need the hash seeds. The
//!   filter and its probe count are covered by one DS signature. Filter size
//!   is either derived per signature ([`derive_params`]) or fixed at setup,
//!   in which case signatures have constant size and `D` is capped.
//! * **Trivial**: the sorted identity list is signed in the clear.

mod params;

pub mod games;
pub mod keyring;

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::amq::{AmqError, BloomFilter, HashPair, ProbePair, Probing};
use crate::sigscheme::{DsKeyPair, DsSignature, Ed25519, SigError, SignatureScheme};

pub use params::{capacity_for, derive_params, filter_bits, identity_capacity, probes_for, DerivedParams};

/// Bits in an identity.
pub const ID_BITS: u32 = 64;
pub const DEFAULT_KAPPA: u32 = 128;
pub const DEFAULT_ELL: u32 = 1;
pub const DEFAULT_LAMBDA: u32 = 15;
pub const SETUP_SEED_LEN: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum CmdvsError {
    #[error("ell must lie in [1, {kappa}], got {ell}")]
    EllOutOfRange { ell: u32, kappa: u32 },
    #[error("lambda {lambda} with ell {ell} needs {k} probes; at most 255 are supported")]
    TooManyProbes { lambda: u32, ell: u32, k: u32 },
    #[error("designated set is empty")]
    EmptyDesignatedSet,
    #[error("identity {0:016x} appears twice in the designated set")]
    DuplicateId(u64),
    #[error("filter of {m} bits cannot hold a single element at k = {k}")]
    CapacityTooSmall { m: u64, k: u32 },
    #[error("a fixed filter size requires generic mode")]
    FixedSizeNeedsGeneric,
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("malformed signature: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error(transparent)]
    Amq(#[from] AmqError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    #[default]
    Generic,
    Trivial,
}

impl Mode {
    pub fn wire_byte(self) -> u8 {
        match self {
            Mode::Generic => 0,
            Mode::Trivial => 1,
        }
    }

    pub fn from_wire_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Mode::Generic),
            1 => Some(Mode::Trivial),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Generic => "generic",
            Mode::Trivial => "trivial",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "generic" => Some(Mode::Generic),
            "trivial" => Some(Mode::Trivial),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetupConfig {
    pub kappa: u32,
    pub ell: u32,
    pub mode: Mode,
    pub probing: Probing,
    /// Constant-size mode: every signature uses a filter of exactly this many bits.
    pub fixed_m: Option<u32>,
}

impl Default for SetupConfig {
    fn default() -> Self {
        SetupConfig {
            kappa: DEFAULT_KAPPA,
            ell: DEFAULT_ELL,
            mode: Mode::Generic,
            probing: Probing::default(),
            fixed_m: None,
        }
    }
}

impl SetupConfig {
    pub fn generic(ell: u32) -> Self {
        SetupConfig { ell, ..Default::default() }
    }

    pub fn trivial() -> Self {
        SetupConfig { mode: Mode::Trivial, ..Default::default() }
    }
}

/// `pp = (verk, ell)`, plus the mode and probe derivation every verifier
/// must agree on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicParams {
    pub verk: Vec<u8>,
    pub ell: u32,
    pub mode: Mode,
    pub probing: Probing,
}

/// `sk = (sigk, ell, h0, h1)` and the signer-side verifier registry.
#[derive(Clone, Debug, PartialEq)]
pub struct SigningKey {
    pub(crate) ds: DsKeyPair,
    pub(crate) kappa: u32,
    pub(crate) ell: u32,
    pub(crate) mode: Mode,
    pub(crate) probing: Probing,
    pub(crate) hash: Option<HashPair>,
    pub(crate) fixed_m: Option<u32>,
    pub(crate) registry: BTreeSet<u64>,
}

impl SigningKey {
    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn probing(&self) -> Probing {
        self.probing
    }

    /// Present in generic mode only.
    pub fn hash(&self) -> Option<HashPair> {
        self.hash
    }

    pub fn fixed_m(&self) -> Option<u32> {
        self.fixed_m
    }

    pub fn ds_keypair(&self) -> &DsKeyPair {
        &self.ds
    }

    /// Identities `keygen` has issued keys for.
    pub fn registry(&self) -> &BTreeSet<u64> {
        &self.registry
    }

    pub fn public_params(&self) -> PublicParams {
        PublicParams {
            verk: self.ds.verk.clone(),
            ell: self.ell,
            mode: self.mode,
            probing: self.probing,
        }
    }
}

pub fn setup(config: &SetupConfig, seed: &[u8; SETUP_SEED_LEN]) -> Result<(PublicParams, SigningKey), CmdvsError> {
    if config.ell == 0 || config.ell > config.kappa {
        return Err(CmdvsError::EllOutOfRange { ell: config.ell, kappa: config.kappa });
    }
    if config.fixed_m.is_some() && config.mode != Mode::Generic {
        return Err(CmdvsError::FixedSizeNeedsGeneric);
    }
    let mut rng = ChaCha20Rng::from_seed(*seed);
    let ds_seed: [u8; 32] = rng.gen();
    let ds = Ed25519.generate(&ds_seed)?;
    let hash = match config.mode {
        Mode::Generic => Some(HashPair::new(rng.gen(), rng.gen())),
        Mode::Trivial => None,
    };
    let sk = SigningKey {
        ds,
        kappa: config.kappa,
        ell: config.ell,
        mode: config.mode,
        probing: config.probing,
        hash,
        fixed_m: config.fixed_m,
        registry: BTreeSet::new(),
    };
    Ok((sk.public_params(), sk))
}

/// One universe element `beta_i ‖ id`, where `beta_i` is `i` written in
/// `floor(log2 ell) + 1` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Element {
    pub index: u32,
    pub prefix_bits: u8,
    pub id: u64,
}

impl Element {
    pub const ENCODED_LEN: usize = 13;

    /// Byte encoding fed to the hashes: prefix bit-length (u8) ‖ index
    /// (u32 BE) ‖ id (u64 BE).
    pub fn to_bytes(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[0] = self.prefix_bits;
        out[1..5].copy_from_slice(&self.index.to_be_bytes());
        out[5..].copy_from_slice(&self.id.to_be_bytes());
        out
    }

    /// The element as a bit string, prefix first.
    pub fn bit_string(&self) -> String {
        format!("{:0width$b}{:064b}", self.index, self.id, width = self.prefix_bits as usize)
    }
}

pub fn prefix_bits(ell: u32) -> u8 {
    (u32::BITS - ell.leading_zeros()) as u8
}

pub fn assign(ell: u32, id: u64) -> Vec<Element> {
    let bits = prefix_bits(ell);
    (1..=ell).map(|index| Element { index, prefix_bits: bits, id }).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerificationKey {
    /// `ell` precomputed hash pairs.
    Generic { id: u64, pairs: Vec<ProbePair> },
    /// The DS verification key; the identity is checked against the list.
    Trivial { id: u64, verk: Vec<u8> },
}

impl VerificationKey {
    pub fn id(&self) -> u64 {
        match self {
            VerificationKey::Generic { id, .. } | VerificationKey::Trivial { id, .. } => *id,
        }
    }

    /// Key material without the identity: 16 bytes per pair (h0 ‖ h1, BE) or
    /// the raw verk.
    pub fn material(&self) -> Vec<u8> {
        match self {
            VerificationKey::Generic { pairs, .. } => {
                let mut out = Vec::with_capacity(pairs.len() * 16);
                for p in pairs {
                    out.extend_from_slice(&p.h0.to_be_bytes());
                    out.extend_from_slice(&p.h1.to_be_bytes());
                }
                out
            }
            VerificationKey::Trivial { verk, .. } => verk.clone(),
        }
    }

    pub fn from_material(mode: Mode, id: u64, bytes: &[u8]) -> Result<Self, CmdvsError> {
        match mode {
            Mode::Generic => {
                if bytes.is_empty() || !bytes.len().is_multiple_of(16) {
                    return Err(CmdvsError::Malformed("pair material must be a non-empty multiple of 16 bytes"));
                }
                let pairs = bytes
                    .chunks_exact(16)
                    .map(|c| ProbePair {
                        h0: u64::from_be_bytes(c[..8].try_into().unwrap()),
                        h1: u64::from_be_bytes(c[8..].try_into().unwrap()),
                    })
                    .collect();
                Ok(VerificationKey::Generic { id, pairs })
            }
            Mode::Trivial => Ok(VerificationKey::Trivial { id, verk: bytes.to_vec() }),
        }
    }
}

/// The key `keygen` would issue for `id`, without touching the registry.
pub fn verification_key(sk: &SigningKey, id: u64) -> VerificationKey {
    match (sk.mode, sk.hash) {
        (Mode::Generic, Some(hash)) => VerificationKey::Generic {
            id,
            pairs: assign(sk.ell, id).iter().map(|e| hash.pair(&e.to_bytes())).collect(),
        },
        _ => VerificationKey::Trivial { id, verk: sk.ds.verk.clone() },
    }
}

/// Issues the key for `id` and records `id` in the verifier registry.
pub fn keygen(pp: &PublicParams, sk: &mut SigningKey, id: u64) -> VerificationKey {
    debug_assert_eq!(pp.verk, sk.ds.verk);
    sk.registry.insert(id);
    verification_key(sk, id)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CmdvsSignature {
    Generic { filter: BloomFilter, ds_sig: DsSignature },
    /// `designated` is strictly increasing.
    Trivial { designated: Vec<u64>, ds_sig: DsSignature },
}

impl CmdvsSignature {
    pub fn mode(&self) -> Mode {
        match self {
            CmdvsSignature::Generic { .. } => Mode::Generic,
            CmdvsSignature::Trivial { .. } => Mode::Trivial,
        }
    }

    pub fn ds_sig(&self) -> &DsSignature {
        match self {
            CmdvsSignature::Generic { ds_sig, .. } | CmdvsSignature::Trivial { ds_sig, .. } => ds_sig,
        }
    }

    /// Mode-specific body followed by the DS signature.
    ///
    /// Generic body: `m` (u32 BE) ‖ `k` (u8) ‖ filter payload.
    /// Trivial body: count (u32 BE) ‖ ids (u64 BE each).
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            CmdvsSignature::Generic { filter, ds_sig } => {
                filter.encode_into(out);
                out.extend_from_slice(ds_sig.as_bytes());
            }
            CmdvsSignature::Trivial { designated, ds_sig } => {
                out.extend_from_slice(&encode_id_list(designated));
                out.extend_from_slice(ds_sig.as_bytes());
            }
        }
    }

    pub fn encoded_len(&self) -> usize {
        match self {
            CmdvsSignature::Generic { filter, ds_sig } => filter.encoded_len() + ds_sig.len(),
            CmdvsSignature::Trivial { designated, ds_sig } => 4 + designated.len() * 8 + ds_sig.len(),
        }
    }

    pub fn encoded_bits(&self) -> u64 {
        self.encoded_len() as u64 * 8
    }

    /// Bits excluding framing headers: filter slots plus DS signature, or
    /// `64 |D|` plus DS signature.
    pub fn payload_bits(&self) -> u64 {
        match self {
            CmdvsSignature::Generic { filter, ds_sig } => filter.m() as u64 + ds_sig.len() as u64 * 8,
            CmdvsSignature::Trivial { designated, ds_sig } => {
                designated.len() as u64 * ID_BITS as u64 + ds_sig.len() as u64 * 8
            }
        }
    }

    /// Parses an exact-length encoding.
    pub fn decode(mode: Mode, bytes: &[u8]) -> Result<Self, CmdvsError> {
        let sig_len = Ed25519::SIGNATURE_LEN;
        if bytes.len() < sig_len {
            return Err(CmdvsError::Malformed("shorter than a DS signature"));
        }
        let (body, sig) = bytes.split_at(bytes.len() - sig_len);
        let ds_sig = DsSignature::from_bytes(sig);
        match mode {
            Mode::Generic => {
                let filter = BloomFilter::decode(body)?;
                Ok(CmdvsSignature::Generic { filter, ds_sig })
            }
            Mode::Trivial => {
                let designated = decode_id_list(body)?;
                Ok(CmdvsSignature::Trivial { designated, ds_sig })
            }
        }
    }
}

fn encode_id_list(ids: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + ids.len() * 8);
    out.extend_from_slice(&(ids.len() as u32).to_be_bytes());
    for id in ids {
        out.extend_from_slice(&id.to_be_bytes());
    }
    out
}

fn decode_id_list(body: &[u8]) -> Result<Vec<u64>, CmdvsError> {
    if body.len() < 4 {
        return Err(CmdvsError::Malformed("truncated identity count"));
    }
    let count = u32::from_be_bytes(body[..4].try_into().unwrap()) as usize;
    let rest = &body[4..];
    if rest.len() != count * 8 {
        return Err(CmdvsError::Malformed("identity count does not match body length"));
    }
    let ids: Vec<u64> = rest.chunks_exact(8).map(|c| u64::from_be_bytes(c.try_into().unwrap())).collect();
    if ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CmdvsError::Malformed("identity list not strictly increasing"));
    }
    Ok(ids)
}

/// Bytes covered by the DS signature in generic mode:
/// msg length (u32 BE) ‖ msg ‖ `m` (u32 BE) ‖ filter payload ‖ `k` (u8).
pub fn generic_signed_payload(msg: &[u8], filter: &BloomFilter) -> Vec<u8> {
    let mut out = Vec::with_capacity(9 + msg.len() + filter.payload().len());
    out.extend_from_slice(&(msg.len() as u32).to_be_bytes());
    out.extend_from_slice(msg);
    out.extend_from_slice(&filter.m().to_be_bytes());
    out.extend_from_slice(filter.payload());
    out.push(filter.k());
    out
}

/// Bytes covered by the DS signature in trivial mode: encoded id list ‖ msg.
pub fn trivial_signed_payload(designated: &[u64], msg: &[u8]) -> Vec<u8> {
    let mut out = encode_id_list(designated);
    out.extend_from_slice(msg);
    out
}

fn check_designated(designated: &[u64]) -> Result<(), CmdvsError> {
    if designated.is_empty() {
        return Err(CmdvsError::EmptyDesignatedSet);
    }
    let mut seen = HashSet::with_capacity(designated.len());
    for &id in designated {
        if !seen.insert(id) {
            return Err(CmdvsError::DuplicateId(id));
        }
    }
    Ok(())
}

/// The filter size and probe count a generic signature over `d` identities
/// would use, or `None` when the set does not fit (constant-size mode).
pub fn filter_shape(sk: &SigningKey, d: u64, lambda: u32) -> Result<Option<(u32, u8)>, CmdvsError> {
    if lambda == 0 {
        return Err(CmdvsError::InvalidArgument("lambda must be at least 1"));
    }
    let k = probes_for(lambda, sk.ell);
    let k8 = u8::try_from(k).map_err(|_| CmdvsError::TooManyProbes { lambda, ell: sk.ell, k })?;
    let m = match sk.fixed_m {
        Some(m) => {
            let fits = capacity_for(m as u64, k, sk.ell)
                .map(|n| sk.ell as u64 * d <= n)
                .unwrap_or(false);
            if !fits {
                return Ok(None);
            }
            m
        }
        None => match u32::try_from(derive_params(sk.ell, d, lambda)?.m) {
            Ok(m) => m,
            Err(_) => return Ok(None),
        },
    };
    Ok(Some((m, k8)))
}

/// Signs `msg` for `designated`. `Ok(None)` is the defined failure output:
/// the signature would exceed `max_bits`, or the set does not fit a
/// constant-size filter.
pub fn sign(
    sk: &SigningKey,
    designated: &[u64],
    msg: &[u8],
    max_bits: u64,
    lambda: u32,
) -> Result<Option<CmdvsSignature>, CmdvsError> {
    check_designated(designated)?;
    let sigma = match sk.mode {
        Mode::Generic => {
            let hash = sk.hash.ok_or(CmdvsError::InvalidArgument("generic key without hash seeds"))?;
            let Some((m, k)) = filter_shape(sk, designated.len() as u64, lambda)? else {
                return Ok(None);
            };
            // Cheap size gate before doing any hashing or signing.
            let projected = (BloomFilter::HEADER_LEN + (m as usize).div_ceil(8) + Ed25519::SIGNATURE_LEN) as u64 * 8;
            if projected > max_bits {
                return Ok(None);
            }
            let mut filter = BloomFilter::new(m, k)?;
            for &id in designated {
                for e in assign(sk.ell, id) {
                    filter.insert_pair(hash.pair(&e.to_bytes()), sk.probing);
                }
            }
            let ds_sig = Ed25519.sign(&sk.ds.sigk, &generic_signed_payload(msg, &filter))?;
            CmdvsSignature::Generic { filter, ds_sig }
        }
        Mode::Trivial => {
            let projected = (4 + designated.len() * 8 + Ed25519::SIGNATURE_LEN) as u64 * 8;
            if projected > max_bits {
                return Ok(None);
            }
            let mut sorted = designated.to_vec();
            sorted.sort_unstable();
            let ds_sig = Ed25519.sign(&sk.ds.sigk, &trivial_signed_payload(&sorted, msg))?;
            CmdvsSignature::Trivial { designated: sorted, ds_sig }
        }
    };
    if sigma.encoded_bits() > max_bits {
        return Ok(None);
    }
    Ok(Some(sigma))
}

/// Deterministic; never panics on untrusted input.
pub fn verify(pp: &PublicParams, vrk: &VerificationKey, msg: &[u8], sigma: &CmdvsSignature) -> bool {
    match (pp.mode, sigma, vrk) {
        (Mode::Generic, CmdvsSignature::Generic { filter, ds_sig }, VerificationKey::Generic { pairs, .. }) => {
            if pairs.len() != pp.ell as usize {
                return false;
            }
            if !Ed25519.verify(&pp.verk, &generic_signed_payload(msg, filter), ds_sig) {
                return false;
            }
            pairs.iter().all(|&p| filter.contains_pair(p, pp.probing))
        }
        (Mode::Trivial, CmdvsSignature::Trivial { designated, ds_sig }, VerificationKey::Trivial { id, .. }) => {
            if designated.binary_search(id).is_err() {
                return false;
            }
            Ed25519.verify(&pp.verk, &trivial_signed_payload(designated, msg), ds_sig)
        }
        _ => false,
    }
}

/// [`verify`] over an encoded signature; anything that fails to parse is
/// rejected.
pub fn verify_encoded(pp: &PublicParams, vrk: &VerificationKey, msg: &[u8], sigma: &[u8]) -> bool {
    match CmdvsSignature::decode(pp.mode, sigma) {
        Ok(s) => verify(pp, vrk, msg, &s),
        Err(_) => false,
    }
}
