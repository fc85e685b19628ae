//! Approximate membership queries: a Bloom filter with double hashing.
//!
//! Every element `x` is reduced to a [`ProbePair`] `(h0(x), h1(x))` of two
//! seeded 64-bit hashes; the `k` probe positions are derived from the pair
//! alone (see [`Probing`]). This is what lets a verifier store only the
//! precomputed pair for its identity and never see the hash seeds.
//!
//! Hashing: `h_b(x) = XXH3-64(x, seed_b)` over the element's byte encoding.
//!
//! Caveat: the hashes are public and non-cryptographic. Anyone holding the
//! seeds (the signer) or a large set of verification keys can search offline
//! for identities that collide with a given filter; the false-positive bound
//! only holds for identities chosen independently of the filter.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::counters;

#[derive(Debug, Error, PartialEq)]
pub enum AmqError {
    #[error("filter size m must be at least {min}, got {got}")]
    SizeTooSmall { min: u64, got: u64 },
    #[error("probe count k must be at least 1")]
    ZeroProbes,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed filter encoding: {0}")]
    Malformed(&'static str),
    #[error("universe exhausted: every element is already inserted")]
    UniverseExhausted,
    #[error("at least {min} trials required, got {got}")]
    TooFewTrials { min: u64, got: u64 },
}

/// `(m, n, mu, k)`: size in bits, element capacity, false-positive bound,
/// probes per element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmqParams {
    pub m: u32,
    pub n: u64,
    pub mu: f64,
    pub k: u8,
}

impl AmqParams {
    pub fn validate(&self) -> Result<(), AmqError> {
        if self.m == 0 {
            return Err(AmqError::SizeTooSmall { min: 1, got: 0 });
        }
        if self.k == 0 {
            return Err(AmqError::ZeroProbes);
        }
        if self.n == 0 {
            return Err(AmqError::InvalidParams("n must be at least 1".into()));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(AmqError::InvalidParams(format!("mu must be in (0, 1], got {}", self.mu)));
        }
        Ok(())
    }
}

/// Seeds of the two base hash functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HashPair {
    pub seed0: u64,
    pub seed1: u64,
}

impl HashPair {
    pub fn new(seed0: u64, seed1: u64) -> Self {
        HashPair { seed0, seed1 }
    }

    pub fn h0(&self, x: &[u8]) -> u64 {
        xxh3_64_with_seed(x, self.seed0)
    }

    pub fn h1(&self, x: &[u8]) -> u64 {
        xxh3_64_with_seed(x, self.seed1)
    }

    pub fn pair(&self, x: &[u8]) -> ProbePair {
        ProbePair { h0: self.h0(x), h1: self.h1(x) }
    }
}

/// `(h0(x), h1(x))` for one element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProbePair {
    pub h0: u64,
    pub h1: u64,
}

/// How probe `i` (1-based) is derived from a [`ProbePair`].
///
/// `Plain` is textbook double hashing, `(h0 + i*h1) mod m` over the integers.
/// On small filters it is measurably worse than independent hashing: a pair
/// with `h1 = 0 (mod m)` collapses onto one slot, and pairs sharing
/// `h1 mod m` overlap along a whole arithmetic progression. At the sizes
/// produced by the parameter derivation (m in the low thousands) this pushes
/// the false-positive rate well past the Goel-Gupta bound.
///
/// `Finalized` forms `h0 + i*h1` in 64-bit wrapping arithmetic and passes it
/// through the SplitMix64 finalizer before reducing mod m. Probes stay a
/// function of the pair only, but behave like independent hashes. It is the
/// default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Probing {
    Plain,
    #[default]
    Finalized,
}

impl Probing {
    pub fn name(self) -> &'static str {
        match self {
            Probing::Plain => "plain",
            Probing::Finalized => "finalized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(Probing::Plain),
            "finalized" => Some(Probing::Finalized),
            _ => None,
        }
    }

    #[inline]
    pub fn index(self, pair: ProbePair, i: u64, m: u32) -> usize {
        debug_assert!(m >= 1);
        match self {
            Probing::Plain => {
                let v = pair.h0 as u128 + i as u128 * pair.h1 as u128;
                (v % m as u128) as usize
            }
            Probing::Finalized => {
                let v = splitmix64_finalize(pair.h0.wrapping_add(i.wrapping_mul(pair.h1)));
                (v % m as u64) as usize
            }
        }
    }
}

#[inline]
fn splitmix64_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The `k` zero-based probe positions for `pair`, for `i = 1..=k`.
pub fn probe_indices(pair: ProbePair, k: u8, m: u32, probing: Probing) -> impl Iterator<Item = usize> {
    (1..=k as u64).map(move |i| probing.index(pair, i, m))
}

/// The bit array `T` together with `k`: exactly what travels on the wire.
///
/// Bits are stored little-endian within each byte (slot `j` is bit `j % 8`
/// of byte `j / 8`); padding bits past `m` are always zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BloomFilter {
    m: u32,
    k: u8,
    bits: Vec<u8>,
}

impl BloomFilter {
    /// Header bytes in [`BloomFilter::encode`]: `m` (u32) and `k` (u8).
    pub const HEADER_LEN: usize = 5;

    pub fn new(m: u32, k: u8) -> Result<Self, AmqError> {
        if m == 0 {
            return Err(AmqError::SizeTooSmall { min: 1, got: 0 });
        }
        if k == 0 {
            return Err(AmqError::ZeroProbes);
        }
        Ok(BloomFilter { m, k, bits: vec![0; payload_len(m)] })
    }

    /// A filter with every slot set. Accepts everything.
    pub fn full(m: u32, k: u8) -> Result<Self, AmqError> {
        let mut f = Self::new(m, k)?;
        for j in 0..m as usize {
            f.set(j);
        }
        Ok(f)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    /// Packed slot bytes, `ceil(m / 8)` of them.
    pub fn payload(&self) -> &[u8] {
        &self.bits
    }

    pub fn popcount(&self) -> u64 {
        self.bits.iter().map(|b| b.count_ones() as u64).sum()
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        self.bits[j / 8] >> (j % 8) & 1 == 1
    }

    #[inline]
    fn set(&mut self, j: usize) {
        self.bits[j / 8] |= 1 << (j % 8);
    }

    pub fn insert_pair(&mut self, pair: ProbePair, probing: Probing) {
        for j in probe_indices(pair, self.k, self.m, probing) {
            self.set(j);
        }
        counters::probe_sets(self.k as u64);
    }

    /// Short-circuits on the first zero slot.
    pub fn contains_pair(&self, pair: ProbePair, probing: Probing) -> bool {
        let mut checked = 0;
        let mut hit = true;
        for j in probe_indices(pair, self.k, self.m, probing) {
            checked += 1;
            if !self.get(j) {
                hit = false;
                break;
            }
        }
        counters::probe_checks(checked);
        hit
    }

    /// True iff every slot set in `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BloomFilter) -> bool {
        self.m == other.m && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// `m` (u32 BE) ‖ `k` (u8) ‖ payload.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::HEADER_LEN + self.bits.len());
        self.encode_into(&mut out);
        out
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.m.to_be_bytes());
        out.push(self.k);
        out.extend_from_slice(&self.bits);
    }

    pub fn encoded_len(&self) -> usize {
        Self::HEADER_LEN + self.bits.len()
    }

    /// Parses a filter from the front of `bytes`, returning it and the
    /// number of bytes consumed.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize), AmqError> {
        if bytes.len() < Self::HEADER_LEN {
            return Err(AmqError::Malformed("truncated header"));
        }
        let m = u32::from_be_bytes(bytes[..4].try_into().unwrap());
        let k = bytes[4];
        if m == 0 {
            return Err(AmqError::Malformed("zero-length filter"));
        }
        if k == 0 {
            return Err(AmqError::Malformed("zero probe count"));
        }
        let len = payload_len(m);
        let body = bytes
            .get(Self::HEADER_LEN..Self::HEADER_LEN + len)
            .ok_or(AmqError::Malformed("truncated payload"))?;
        Ok((Self::from_payload(m, k, body)?, Self::HEADER_LEN + len))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, AmqError> {
        let (f, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(AmqError::Malformed("trailing bytes"));
        }
        Ok(f)
    }

    /// Rebuilds a filter from its packed payload, checking length and that
    /// padding bits are zero.
    pub fn from_payload(m: u32, k: u8, payload: &[u8]) -> Result<Self, AmqError> {
        if m == 0 {
            return Err(AmqError::Malformed("zero-length filter"));
        }
        if k == 0 {
            return Err(AmqError::Malformed("zero probe count"));
        }
        if payload.len() != payload_len(m) {
            return Err(AmqError::Malformed("payload length does not match m"));
        }
        let tail = m % 8;
        if tail != 0 && payload[payload.len() - 1] >> tail != 0 {
            return Err(AmqError::Malformed("nonzero padding bits"));
        }
        Ok(BloomFilter { m, k, bits: payload.to_vec() })
    }
}

fn payload_len(m: u32) -> usize {
    (m as usize).div_ceil(8)
}

/// A filter plus the hash functions that feed it: `(T, aux)` with
/// `aux = (k, h0, h1)`. This is the signer-side view.
#[derive(Clone, Debug, PartialEq)]
pub struct Bloom {
    pub filter: BloomFilter,
    pub hash: HashPair,
    pub probing: Probing,
}

/// `Gen`: an all-zero structure of `params.m` slots.
pub fn bloom_gen(params: AmqParams, hash: HashPair, probing: Probing) -> Result<Bloom, AmqError> {
    params.validate()?;
    Ok(Bloom { filter: BloomFilter::new(params.m, params.k)?, hash, probing })
}

impl Bloom {
    pub fn insert(&mut self, x: &[u8]) {
        let pair = self.hash.pair(x);
        self.filter.insert_pair(pair, self.probing);
    }

    pub fn lookup(&self, x: &[u8]) -> bool {
        self.filter.contains_pair(self.hash.pair(x), self.probing)
    }
}

/// `(1 - exp(-(n + q/2) k / (m - 1)))^(k q)`: the Goel-Gupta upper bound on
/// the probability that `q` fresh elements all look like members after `n`
/// insertions. `q = 1` is the ordinary false-positive bound.
pub fn fp_bound(m: u64, n: u64, k: u64, q: u64) -> Result<f64, AmqError> {
    if m < 2 {
        return Err(AmqError::SizeTooSmall { min: 2, got: m });
    }
    if n == 0 || k == 0 || q == 0 {
        return Err(AmqError::InvalidParams("n, k and q must be at least 1".into()));
    }
    let x = (n as f64 + q as f64 / 2.0) * k as f64 / (m - 1) as f64;
    let fill = -(-x).exp_m1();
    Ok(fill.powf((k * q) as f64))
}

/// A sampleable element universe for false-positive measurement.
pub trait Universe {
    /// Number of elements, or `None` when it is too large to matter.
    fn size(&self) -> Option<u128>;

    fn sample(&self, rng: &mut ChaCha20Rng) -> Vec<u8>;
}

/// `{0, .., size - 1}`, each encoded as 8 big-endian bytes.
#[derive(Clone, Copy, Debug)]
pub struct U64Universe {
    pub size: u64,
}

impl Universe for U64Universe {
    fn size(&self) -> Option<u128> {
        Some(self.size as u128)
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> Vec<u8> {
        rng.gen_range(0..self.size).to_be_bytes().to_vec()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FprEstimate {
    pub trials: u64,
    pub hits: u64,
    pub rate: f64,
    /// Normal-approximation 95% confidence half-width.
    pub half_width_95: f64,
}

impl FprEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let rate = hits as f64 / trials as f64;
        let half_width_95 = 1.96 * (rate * (1.0 - rate) / trials as f64).sqrt();
        FprEstimate { trials, hits, rate, half_width_95 }
    }
}

pub const MIN_FPR_TRIALS: u64 = 10_000;

/// Looks up `trials` uniformly drawn non-members and reports the fraction
/// that hit.
pub fn measure_fpr<U: Universe>(
    bloom: &Bloom,
    inserted: &HashSet<Vec<u8>>,
    universe: &U,
    trials: u64,
    seed: u64,
) -> Result<FprEstimate, AmqError> {
    if trials < MIN_FPR_TRIALS {
        return Err(AmqError::TooFewTrials { min: MIN_FPR_TRIALS, got: trials });
    }
    if let Some(size) = universe.size() {
        if size <= inserted.len() as u128 {
            return Err(AmqError::UniverseExhausted);
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..trials {
        let x = loop {
            let x = universe.sample(&mut rng);
            if !inserted.contains(&x) {
                break x;
            }
        };
        if bloom.lookup(&x) {
            hits += 1;
        }
    }
    Ok(FprEstimate::from_counts(hits, trials))
}
