//! Digital-signature abstraction `(SigGen, SigSign, SigVer)`.
//!
//! The CMDVS layer only needs a deterministic, fixed-length signature over
//! byte strings. [`SignatureScheme`] captures that contract; [`Ed25519`] is the
//! default backend (RFC 8032, 32-byte verification keys, 64-byte signatures).

use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use thiserror::Error;

use crate::counters;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SigError {
    #[error("seed must be {expected} bytes, got {got}")]
    SeedLength { expected: usize, got: usize },
    #[error("signing key must be {expected} bytes, got {got}")]
    KeyLength { expected: usize, got: usize },
}

/// A signing/verification key pair as opaque bytes.
#[derive(Clone, PartialEq, Eq)]
pub struct DsKeyPair {
    pub sigk: Vec<u8>,
    pub verk: Vec<u8>,
}

impl std::fmt::Debug for DsKeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DsKeyPair")
            .field("verk", &hex::encode(&self.verk))
            .finish_non_exhaustive()
    }
}

/// A backend signature. Its length is always the backend's declared length.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DsSignature(Vec<u8>);

impl DsSignature {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Wraps raw bytes. Length is checked against the backend at verify time.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        DsSignature(bytes.to_vec())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub trait SignatureScheme: Send + Sync {
    /// Bytes of entropy `generate` expects.
    fn seed_len(&self) -> usize;

    fn signature_len(&self) -> usize;

    fn signature_bit_length(&self) -> usize {
        self.signature_len() * 8
    }

    fn generate(&self, seed: &[u8]) -> Result<DsKeyPair, SigError>;

    fn sign(&self, sigk: &[u8], msg: &[u8]) -> Result<DsSignature, SigError>;

    /// Never fails: malformed keys or signatures simply do not verify.
    fn verify(&self, verk: &[u8], msg: &[u8], sig: &DsSignature) -> bool;
}

/// RFC 8032 Ed25519. Verification uses the strict variant, which rejects
/// non-canonical scalars and small-order points.
#[derive(Clone, Copy, Debug, Default)]
pub struct Ed25519;

impl Ed25519 {
    pub const SEED_LEN: usize = 32;
    pub const VERK_LEN: usize = 32;
    pub const SIGNATURE_LEN: usize = 64;
}

impl SignatureScheme for Ed25519 {
    fn seed_len(&self) -> usize {
        Self::SEED_LEN
    }

    fn signature_len(&self) -> usize {
        Self::SIGNATURE_LEN
    }

    fn generate(&self, seed: &[u8]) -> Result<DsKeyPair, SigError> {
        let seed: [u8; 32] = seed.try_into().map_err(|_| SigError::SeedLength {
            expected: Self::SEED_LEN,
            got: seed.len(),
        })?;
        let sk = SigningKey::from_bytes(&seed);
        Ok(DsKeyPair {
            sigk: seed.to_vec(),
            verk: sk.verifying_key().to_bytes().to_vec(),
        })
    }

    fn sign(&self, sigk: &[u8], msg: &[u8]) -> Result<DsSignature, SigError> {
        let bytes: [u8; 32] = sigk.try_into().map_err(|_| SigError::KeyLength {
            expected: Self::SEED_LEN,
            got: sigk.len(),
        })?;
        counters::ds_sign();
        let sig = SigningKey::from_bytes(&bytes).sign(msg);
        Ok(DsSignature(sig.to_bytes().to_vec()))
    }

    fn verify(&self, verk: &[u8], msg: &[u8], sig: &DsSignature) -> bool {
        counters::ds_verify();
        let Ok(verk) = <[u8; 32]>::try_from(verk) else {
            return false;
        };
        let Ok(sig) = <[u8; 64]>::try_from(sig.as_bytes()) else {
            return false;
        };
        let Ok(vk) = VerifyingKey::from_bytes(&verk) else {
            return false;
        };
        vk.verify_strict(msg, &ed25519_dalek::Signature::from_bytes(&sig))
            .is_ok()
    }
}

pub fn sig_gen(seed: &[u8]) -> Result<DsKeyPair, SigError> {
    Ed25519.generate(seed)
}

pub fn sig_sign(sigk: &[u8], msg: &[u8]) -> Result<DsSignature, SigError> {
    Ed25519.sign(sigk, msg)
}

pub fn sig_verify(verk: &[u8], msg: &[u8], sig: &DsSignature) -> bool {
    Ed25519.verify(verk, msg, sig)
}
