//! Simulation laboratory for a Schnorr-style zero-knowledge identification
//! protocol carried over a single qubit.
//!
//! * [`groupmath`]: modular arithmetic and group parameters.
//! * [`qsim`]: exact single-qubit statevector simulation.
//! * [`schnorr`]: the classical identification protocol.
//! * [`qzkp`]: prover and verifier state machines for the qubit protocol.
//! * [`channel`]: ideal, noisy and eavesdropped quantum channels.
//! * [`harness`]: seeded multi-round experiments and exact oracles.
//! * [`cli`]: the `qzkp` command-line frontend.

pub mod channel;
pub mod cli;
pub mod error;
pub mod format;
pub mod groupmath;
pub mod harness;
pub mod qsim;
pub mod qzkp;
pub mod schnorr;

pub use error::{Error, ErrorKind, Result};
