//! Variational Bayes over the model parameters.
//!
//! Weights get a factorized Gaussian posterior `q(θ) = N(μ, diag σ²)` with
//! σ = softplus(ρ), fitted by stochastic gradient ascent on the evidence
//! lower bound against an isotropic Gaussian prior:
//!
//! ```text
//! ELBO(μ, ρ) = E_q[ log p(D | θ) ] − KL[ q ‖ p ]
//! ```
//!
//! The expectation is estimated with M reparameterized draws θ = μ + σ ⊙ ε,
//! which keeps the estimator differentiable in (μ, ρ). Prediction averages S
//! posterior draws into an ensemble whose spread is the model's uncertainty
//! estimate. The posterior can cover every parameter or, via
//! [`ViScope::QuantumOnly`], just the circuit angles with classical weights
//! held as point masses.

pub mod elbo;
pub mod posterior;
pub mod predict;
pub mod train;

pub use elbo::{elbo, elbo_with_eps, kl_gaussian, log_likelihood, ElboGrad, ElboParts};
pub use posterior::{PriorSpec, VariationalPosterior};
pub use predict::{predict_bayes, PredictiveEnsemble};
pub use train::{train_vi, train_vi_from, ViConfig, ViLog, ViRow, ViScope};

use crate::model::ModelError;
use thiserror::Error;

/// ELBO draws per training epoch.
pub const DEFAULT_MC_SAMPLES: usize = 2;
/// Posterior draws per predictive ensemble.
pub const DEFAULT_PREDICT_DRAWS: usize = 20;
/// Observation noise scale of the Gaussian likelihood.
pub const DEFAULT_SIGMA_OBS: f64 = 0.05;
/// Initial posterior width around the point initialization.
pub const DEFAULT_INIT_SIGMA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum BayesError {
    #[error("posterior has {got} parameters, model expects {expected}")]
    DimMismatch { got: usize, expected: usize },
    #[error("observation noise scale must be positive, got {0}")]
    BadSigmaObs(f64),
    #[error("prior standard deviation must be positive, got {0}")]
    BadPrior(f64),
    #[error("at least one Monte Carlo draw is required")]
    BadSampleCount,
    #[error("learning rate must be nonnegative, got {lr}")]
    BadLearningRate { lr: f64 },
    #[error("quantum-only scope requires a net with a quantum parameter range")]
    NoQuantumRange,
    #[error("ELBO became non-finite")]
    NonFinite,
    #[error("ELBO became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}
