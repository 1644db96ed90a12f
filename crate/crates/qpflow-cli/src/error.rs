//! Process-level error split: what the exit code owes the caller.
//!
//! Everything a user can fix by editing a config, a path, or on-disk state is
//! a validation failure (exit 2); everything that went wrong numerically mid
//! computation (divergence, non-finite losses, solver exhaustion) is a
//! numerical failure (exit 3). Library errors are classified here once so the
//! commands just use `?`.

use qpflow::bayes::BayesError;
use qpflow::checkpoint::CheckpointError;
use qpflow::metrics::MetricsError;
use qpflow::model::{ModelError, TrainError};
use qpflow::powerflow::{CaseError, DatasetError, ScenarioError, SolveError};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

/// Wraps an io::Error with the path it concerned.
pub fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Validation(format!("{}: {e}", path.display()))
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::TooManyRedraws { .. } | ScenarioError::SampleExhausted { .. } => {
                CliError::Numeric(format!("scenario generation: {e}"))
            }
            other => CliError::Validation(format!("scenario generation: {other}")),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Diverged { .. } => CliError::Numeric(format!("training: {e}")),
            other => CliError::Validation(format!("training: {other}")),
        }
    }
}

impl From<BayesError> for CliError {
    fn from(e: BayesError) -> Self {
        match e {
            BayesError::Diverged { .. } | BayesError::NonFinite => {
                CliError::Numeric(format!("variational training: {e}"))
            }
            other => CliError::Validation(format!("variational training: {other}")),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Numeric(format!("power flow: {e}"))
    }
}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        CliError::Validation(format!("case file: {e}"))
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Validation(format!("dataset: {e}"))
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Validation(format!("checkpoint: {e}"))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(format!("model: {e}"))
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Validation(format!("metrics: {e}"))
    }
}
