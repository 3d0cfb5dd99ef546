//! Desk-scale commit-and-measure verification stack.
//!
//! A classical verifier obtains standard/Hadamard measurement outcomes of a
//! quantum prover's state through a four-message commit-and-measure protocol
//! built on trapdoor claw-free functions. Everything here runs against an
//! exact state-vector simulator with a deliberately insecure toy claw-free
//! backend, so that the protocol's completeness statements and the identities
//! behind its soundness analysis become executable numeric checks instead of
//! asymptotic claims.
//!
//! Module map:
//!
//! - [`qsim`]: dense state-vector simulator (registers, gates, exact outcome
//!   distributions, partial trace).
//! - [`rtcf`]: dual-mode randomized trapdoor claw-free functions with an exact
//!   toy permutation backend, plus runnable hardcore-bit/collapsing games.
//! - [`batchkeys`]: batch key generation (trivial and PRF-compressed backends)
//!   and a GGM puncturable PRF.
//! - [`mproto`]: the N-qubit commit-and-measure protocol itself.
//! - [`extract`]: protocol observables, the teleportation-style extractor,
//!   verifier-output distributions, hybrids, and the extraction identities as
//!   numeric checks.
//! - [`delegate`]: post-hoc verification, the verifier-succinct delegation
//!   protocol, parallel repetition, and batch verification.
//! - [`compile`]: hash-compressed compilers (12-round and 8-round variants)
//!   and the hash-chain non-interactive transform.
//! - [`harness`]: experiment configs, reports, and shared statistics.

pub mod batchkeys;
pub mod bits;
pub mod compile;
pub mod delegate;
pub mod extract;
pub mod harness;
pub mod mproto;
pub mod qsim;
pub mod rtcf;
pub mod tol;
pub mod wire;

pub use bits::Bits;
