//! Baseline constructors sharing the [`Model`] wrapper.
//!
//! Three reference points bracket the Bayesian hybrid: a plain MLP trained
//! deterministically, the same MLP trained variationally, and the hybrid
//! body trained deterministically (no posterior). Which trainer runs is the
//! caller's choice; this module only fixes the architectures so every
//! comparison shares the flow-augmented output and the loss.

use super::net::Model;
use super::ModelError;
use crate::powerflow::{Norms, PowerCase};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Dense tanh stack, deterministic training.
    Mlp,
    /// Dense tanh stack, variational training.
    ClassicalBnn,
    /// Hybrid body, deterministic training.
    PlainQnn,
}

/// Builds the baseline's architecture for a case. `widths` shape the MLP
/// variants; `(m, layers)` shape the quantum one.
pub fn build_baseline(
    kind: BaselineKind,
    case: &PowerCase,
    norms: &Norms,
    widths: &[usize],
    m: usize,
    layers: usize,
) -> Result<Model, ModelError> {
    match kind {
        BaselineKind::Mlp | BaselineKind::ClassicalBnn => {
            Model::new_mlp(case.clone(), norms.clone(), widths)
        }
        BaselineKind::PlainQnn => Model::new_hybrid(case.clone(), norms.clone(), m, layers),
    }
}
