//! Exact moment operators of random circuits built from two-qubit gates, the
//! Markov chains they induce on Pauli strings, and spectral/mixing analysis
//! of those chains.
//!
//! The crate is organized bottom-up:
//!
//! - [`pauli`] — Pauli-basis algebra: expansion/reconstruction of operators,
//!   the swap operator, and permutation-operator trace identities.
//! - [`moments`] — moment operators Ĝ and G for gate ensembles (Haar closed
//!   forms, the 2-qubit Clifford group, explicit weighted gate sets) and the
//!   k-copy spectral-gap test.
//! - [`chains`] — the full Markov chain on nonzero Pauli strings, the lumped
//!   "zero chain" counting non-identity sites, and the accelerated variant.
//! - [`spectral`] — spectral gaps, total-variation distances, exact mixing
//!   times and gap-based mixing bounds.
//! - [`simulate`] — Monte Carlo: random circuits, coefficient-decay curves,
//!   zero-chain trajectories, frame potentials.
//! - [`metrics`] — the expected coefficient map, 1-/2-norm design distances
//!   and the diamond-norm upper bound.
//!
//! All randomized operations take explicit seeds and produce bit-identical
//! results for identical inputs.

pub mod chains;
pub mod metrics;
pub mod moments;
pub mod pauli;
pub mod simulate;
pub mod spectral;

use thiserror::Error;

/// Error taxonomy shared by every module.
///
/// `InvalidInput` marks precondition violations (bad dimensions, caps
/// exceeded, malformed files); `Numeric` marks runtime numeric failures
/// (non-convergence, residues beyond tolerance, iteration caps).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
