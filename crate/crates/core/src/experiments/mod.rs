//! Monte-Carlo experiments and invariant checks.
//!
//! Experiments implement [`Experiment`] and are looked up by name in an
//! [`ExperimentRegistry`]; `verify` runs every [`Check`] in a [`CheckRegistry`].
//! Every trial draws from a stream derived from the base seed and its index, and
//! results are reduced in index order, so outputs do not depend on the thread count.

pub mod ambiguity;
pub mod checks;
pub mod descent;
pub mod moments;
pub mod output;
pub mod phase;
pub mod registry;
pub mod small_ball;
pub mod specnorm;
pub mod stats;

pub use ambiguity::{toeplitz_ambiguity_demo, AmbiguityReport};
pub use checks::{Check, CheckOutcome, CheckRegistry, VERIFY_SEED};
pub use descent::{
    descent_bound_check, descent_cone_sampler, min_conic_probe, ConicProbe, DescentBoundReport, DescentConeSample,
    TangentFrame, DESCENT_BOUND,
};
pub use moments::{
    fourth_moment_bound_check, hanson_wright_audit, moment_identity_batch, moment_identity_check,
    FourthMomentReport, HansonWrightAudit, MomentIdentityReport,
};
pub use output::{sidecar_path, Cell, Sidecar, Table};
pub use phase::{error_vs_noise, phase_grid, GridSpec, NoiseSpec, NoiseTable, PhaseResult, SuccessRate, TrialOutcome};
pub use registry::{Experiment, ExperimentOutput, ExperimentParams, ExperimentRegistry, DEFAULT_SEED};
pub use small_ball::{small_ball_bound_shape, small_ball_estimate, SmallBallCurve};
pub use specnorm::{scaling_fit, specnorm_deviation, symmetrized_radius, RadiusEstimate, ScalingFit, SpecNormEstimate};
pub use stats::{Accumulator, Estimate};
