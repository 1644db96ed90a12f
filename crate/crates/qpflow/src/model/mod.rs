//! The hybrid predictor and its classical baselines.
//!
//! A [`Model`] maps a normalized injection vector `[p; q]` (length 2n) to a
//! normalized output `[v; phi; pf; qf]` (length 2n + 2·n_branch). The first
//! 2n entries come from the network itself; the branch-flow block is derived
//! from the denormalized voltage prediction through the usual flow
//! equations, then renormalized, so flow errors backpropagate into the
//! network through the analytic flow sensitivities.
//!
//! Two network bodies share this wrapper:
//!
//! * hybrid: dense 2n → 2m with tanh, scaled by π so the encoding angles
//!   stay in [−π, π]; an m-qubit variational circuit read out as m ⟨Z⟩
//!   values; dense m → 2n linear head,
//! * MLP: dense tanh stack 2n → widths… → 2n with a linear head.
//!
//! Parameters live in one flat vector with a named-range index map
//! ([`ParamLayout`]), which is what the variational-inference and capacity
//! code consume: both only need [`Differentiable::output`] and the
//! vector-Jacobian product [`Differentiable::vjp`].

pub mod baseline;
pub mod layer;
pub mod loss;
pub mod net;
pub mod params;
pub mod train;

pub use baseline::{build_baseline, BaselineKind};
pub use layer::{Activation, DenseSpec};
pub use loss::{batch_grad, batch_loss, loss, loss_terms, LossTerms, LossWeights, NormPair};
pub use net::{Differentiable, Model, NetKind, Prediction};
pub use params::{FlatParams, NamedRange, ParamLayout};
pub use train::{train_deterministic, EpochRow, TrainConfig, TrainError, TrainLog};

use crate::powerflow::SolveError;
use crate::quantum::QuantumError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input has length {got}, the model expects {expected}")]
    InputLength { got: usize, expected: usize },
    #[error("parameter vector has length {got}, the layout holds {expected}")]
    ParamLength { got: usize, expected: usize },
    #[error("target has length {got}, the model expects {expected}")]
    TargetLength { got: usize, expected: usize },
    #[error("cotangent has length {got}, the output dimension is {expected}")]
    CotangentLength { got: usize, expected: usize },
    #[error("no parameter range named {name:?}")]
    UnknownRange { name: String },
    #[error("range {name:?} holds {expected} values, got {got}")]
    RangeLength {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("invalid model shape: {0}")]
    BadShape(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
