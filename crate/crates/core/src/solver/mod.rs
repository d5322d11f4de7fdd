//! Nuclear-norm recovery over symmetric Toeplitz matrices.

pub mod admm;
pub mod certify;
pub mod config;
pub mod prox;

pub use admm::{recover, recover_measurements, RecoveryReport};
pub use certify::{certify, Certificate};
pub use config::SolverConfig;
pub use prox::{ball_projection, project_lp_ball, soft_shrink, svt, BallProjection};
