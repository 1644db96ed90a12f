//! Model capacity and accuracy metrics.
//!
//! Three families:
//!
//! * **Fisher / effective dimension.** The empirical Fisher information
//!   `F̂ = (1/n) Σ g_i g_iᵀ` with `g_i = Jᵀ(y_i − f(x_i))/σ²` feeds a
//!   Monte Carlo effective dimension over the parameter box,
//!
//!   ```text
//!   d_eff = 2 · ln( (1/K) Σ_k √det(I + ζ F̃(θ_k)) ) / ln ζ,   ζ = γn / (2π ln n)
//!   ```
//!
//!   with the Fisher draws trace-normalized so their average trace is d.
//!   Reported both raw and divided by d, where the normalized value is the
//!   fraction of parameter directions the model actually uses.
//!
//! * **VC-style generalization bound.** A parameter-count capacity estimate
//!   h and `bound = risk + √((h(ln(n/h)+1) + ln(1/δ))/n)`.
//!
//! * **Accuracy tables.** Voltage MSE (×10³ on per-unit values), the
//!   fraction of bus angle errors above 0.05 rad, the fraction of branch
//!   active-flow errors above 5 MW, and the first epoch at which a run meets
//!   the angle and flow targets.

pub mod accuracy;
pub mod bound;
pub mod effdim;
pub mod fisher;

pub use accuracy::{accuracy_report, empirical_risk, epochs_to_target, AccuracyReport};
pub use bound::{gen_error_bound, vc_dim_estimate, GenBoundResult};
pub use effdim::{effective_dimension, effective_dimension_from_draws, zeta, EffDimConfig, EffDimResult};
pub use fisher::{empirical_fisher, FisherEstimate};

use crate::bayes::BayesError;
use crate::model::ModelError;
use thiserror::Error;

/// Angle-error threshold used by the deviation metrics, in radians.
pub const PHI_TOL_RAD: f64 = 0.05;
/// Active-flow error threshold used by the deviation metrics, in MW.
pub const P_TOL_MW: f64 = 5.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("metric requires a nonempty dataset")]
    EmptyData,
    #[error("invalid metric configuration: {0}")]
    BadConfig(String),
    #[error("effective dimension needs zeta > 1, got {zeta}")]
    ZetaNotAboveOne { zeta: f64 },
    #[error("prediction has {got} components, expected {expected}")]
    PredictionLength { got: usize, expected: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
}
