//! Centralized multi-designated verifier signatures and a remote-control
//! protocol for IoT fleets built on them.

pub mod amq;
pub mod bench;
pub mod cmdvs;
pub mod counters;
pub mod iotrex;
pub mod sigscheme;

pub use amq::{BloomFilter, HashPair, Probing};
pub use cmdvs::{
    keygen, setup, sign, verify, CmdvsError, CmdvsSignature, Mode, PublicParams, SetupConfig, SigningKey,
    VerificationKey,
};
pub use iotrex::{AuthenticatedCommand, DeviceDecision, DeviceState};
pub use sigscheme::{DsKeyPair, DsSignature, Ed25519, SignatureScheme};
