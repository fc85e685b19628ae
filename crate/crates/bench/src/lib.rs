//! Fixtures shared by the criterion benches.

use iotrex_core::cmdvs::{self, SetupConfig};
use iotrex_core::{AuthenticatedCommand, DsKeyPair, Ed25519, PublicParams, SignatureScheme, SigningKey};

/// Benchmark command payload, 256 bits.
pub const CMD: [u8; 32] = [0x42; 32];

/// Distinct, well-spread ids.
pub fn ids(n: usize) -> Vec<u64> {
    (1..=n as u64).map(|i| i.wrapping_mul(0x9e37_79b9_7f4a_7c15)).collect()
}

pub struct Fixture {
    pub pp: PublicParams,
    pub sk: SigningKey,
    pub designated: Vec<u64>,
}

impl Fixture {
    pub fn new(setup: &SetupConfig, d: usize) -> Self {
        let (pp, sk) = cmdvs::setup(setup, &[0x5e; 32]).expect("valid setup");
        Fixture { pp, sk, designated: ids(d) }
    }

    pub fn issue(&self, lambda: u32) -> AuthenticatedCommand {
        iotrex_core::iotrex::manager_issue(&self.sk, &self.designated, &CMD, u64::MAX, lambda)
            .expect("valid inputs")
            .expect("no length bound")
    }
}

pub fn baseline_key() -> DsKeyPair {
    Ed25519.generate(&[0x5e; 32]).expect("32-byte seed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn ids_are_distinct() {
        assert_eq!(ids(10_000).into_iter().collect::<HashSet<_>>().len(), 10_000);
    }

    #[test]
    fn fixture_signs_for_everyone() {
        let f = Fixture::new(&SetupConfig::default(), 20);
        let ac = f.issue(10);
        for &id in &f.designated {
            assert!(cmdvs::verify(&f.pp, &cmdvs::verification_key(&f.sk, id), &CMD, &ac.sigma));
        }
    }
}
