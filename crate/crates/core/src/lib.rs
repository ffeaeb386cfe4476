//! Multipartite quantum discord for a few special N-qubit state families.
//!
//! The crate evaluates closed-form discord expressions for the symmetric
//! Pauli family, the diagonal local-field family and noisy GHZ states,
//! and checks them against a numerical minimization over sequential
//! conditional projective measurements. It also models phase-flip
//! dephasing and the discord-freezing window it produces for even qubit
//! counts.
//!
//! Qubits are labelled `1..=N` in user-facing APIs; qubit 1 is the most
//! significant tensor factor (leftmost letter of a Pauli word).

pub mod analytic_discord;
pub mod decoherence;
pub mod error;
pub mod measurement_oracle;
mod nelder_mead;
pub mod numfmt;
pub mod pauli_state;
pub mod spectral;

pub use error::{Error, Result};

/// Complex scalar used for every dense matrix in the crate.
pub type C64 = nalgebra::Complex<f64>;
