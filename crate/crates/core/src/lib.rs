//! Network coding over the Chinese remainder theorem.
//!
//! Instead of a coding vector, every packet carries a pair of primes `(p, q)`
//! and payload residues congruent to the message modulo `p·q`. Internal nodes
//! merge the congruences they receive and re-reduce modulo a freshly picked
//! pair; receivers merge everything they hear and read off each message whose
//! primes they have collected.
//!
//! - [`crt`]: congruence classes, extended gcd, merging and system solving.
//! - [`primes`]: primality, m-bit prime counting and prime pools.
//! - [`coding`]: source encoding, internal recoding and receiver decoding.
//! - [`wire`]: the fixed-width packet codec.
//! - [`topology`]: leveled networks, the butterfly and random layered networks.
//! - [`simulator`]: whole multicast sessions and the layered experiment.
//! - [`analysis`]: recover-rate estimators and header-overhead accounting.

pub mod analysis;
pub mod coding;
pub mod crt;
pub mod error;
pub mod primes;
pub mod serde_decimal;
pub mod simulator;
pub mod topology;
pub mod wire;

pub use coding::{
    Packet, PrimePair, RecodePath, RecodePolicy, RecoveryOutcome, SessionConfig, SessionMode,
    SourceIdentity,
};
pub use crt::{CongruenceClass, Incompatible};
pub use error::{Error, Result};
pub use primes::PrimePool;
pub use simulator::{RecoveryReport, Session};
pub use topology::{LayeredParams, NodeId, Topology};
