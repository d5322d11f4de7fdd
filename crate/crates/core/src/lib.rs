//! Recovery of simultaneously low-rank and symmetric Toeplitz matrices from
//! rank-one measurements `b_k = ξ_k^T X ξ_k + e_k` by nuclear-norm
//! minimization, together with a Monte-Carlo harness that checks the
//! quantitative ingredients behind the recovery guarantee.
//!
//! Module map:
//! - [`toeplitz`]: diagonal parameterization, Toeplitz projection, circulant embedding, spike models.
//! - [`linalg`]: dense symmetric matrices and eigen-based norms.
//! - [`sensing`]: scalar laws, sensing vectors, the measurement operator and noise.
//! - [`solver`]: the splitting solver, its proximal maps and certification.
//! - [`experiments`]: named experiments and invariant checks behind runtime registries.

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod rng;
pub mod sensing;
pub mod solver;
pub mod toeplitz;

pub use error::{Error, Result};
pub use linalg::{nuclear_norm, spectral_norm, sym_eig, DenseSymmetric, SymEig};
pub use toeplitz::{
    circulant_embed, frobenius_weights, opnorm_upper, project_toeplitz, spike_toeplitz,
    toeplitz_to_dense, CirculantSpectrum, Spike, SpikeModel, ToeplitzVector,
};

/// Build identifier recorded in every sidecar.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
