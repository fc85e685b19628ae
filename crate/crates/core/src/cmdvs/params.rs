//! Filter parameter derivation for the Bloom instantiation.

use std::f64::consts::LN_2;

use crate::amq::fp_bound;

use super::CmdvsError;

/// Parameters chosen for one signature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedParams {
    /// Target false-positive exponent: the bound is `2^-lambda`.
    pub lambda: u32,
    /// Probes per element, `ceil(lambda / ell)`.
    pub k: u32,
    /// Filter size in bits.
    pub m: u64,
    /// Goel-Gupta bound with `n = ell * d`, `q = ell`.
    pub mu_bound: f64,
    /// Elements inserted, `ell * d`.
    pub n_capacity: u64,
}

impl DerivedParams {
    /// `k * ell`, the effective number of probes a verifier checks.
    pub fn probes_per_identity(&self, ell: u32) -> u64 {
        self.k as u64 * ell as u64
    }
}

pub fn probes_for(lambda: u32, ell: u32) -> u32 {
    lambda.div_ceil(ell)
}

/// Smallest filter size for which `k*ell` probes over `d` identities keep the
/// false-positive bound at or below `2^-(k*ell)`:
/// `m = ceil((d + 1/2) k ell / ln 2) + 1`.
pub fn filter_bits(d: u64, k: u32, ell: u32) -> u64 {
    let kl = k as f64 * ell as f64;
    ((d as f64 + 0.5) * kl / LN_2).ceil() as u64 + 1
}

pub fn derive_params(ell: u32, d: u64, lambda: u32) -> Result<DerivedParams, CmdvsError> {
    if ell == 0 || d == 0 || lambda == 0 {
        return Err(CmdvsError::InvalidArgument("ell, d and lambda must be at least 1"));
    }
    let k = probes_for(lambda, ell);
    let m = filter_bits(d, k, ell);
    let n = ell as u64 * d;
    let mu_bound = fp_bound(m, n, k as u64, ell as u64)?;
    Ok(DerivedParams { lambda, k, m, mu_bound, n_capacity: n })
}

/// Largest element count a filter of `m` bits supports at `k` probes:
/// `floor((m - 1) ln 2 / k - ell / 2)`. Identity capacity is this over `ell`.
pub fn capacity_for(m: u64, k: u32, ell: u32) -> Result<u64, CmdvsError> {
    if m < 2 {
        return Err(CmdvsError::InvalidArgument("m must be at least 2"));
    }
    if k == 0 || ell == 0 {
        return Err(CmdvsError::InvalidArgument("k and ell must be at least 1"));
    }
    let n = ((m - 1) as f64 * LN_2 / k as f64 - ell as f64 / 2.0).floor();
    if n < 1.0 {
        return Err(CmdvsError::CapacityTooSmall { m, k });
    }
    Ok(n as u64)
}

/// Identities that fit: `floor(capacity_for(m, k, ell) / ell)`.
pub fn identity_capacity(m: u64, k: u32, ell: u32) -> Result<u64, CmdvsError> {
    Ok(capacity_for(m, k, ell)? / ell as u64)
}
