//! Self-contained training artifacts on disk.
//!
//! A checkpoint is one JSON document embedding everything needed to rebuild
//! and query the model: the net spec, the grid case, normalization
//! constants, the parameter index map, the trained state (point parameters
//! or a variational posterior, each with the config that produced it), and
//! the seed. Loading re-validates the embedded pieces against each other so
//! a stale or hand-edited file fails loudly instead of predicting garbage.
//!
//! Writes go through a sibling temp file plus rename, so a crash mid-write
//! never leaves a truncated checkpoint behind.

use crate::bayes::{ViConfig, VariationalPosterior};
use crate::model::{FlatParams, Model, ModelError, TrainConfig};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedState {
    /// Gradient-descent point estimate.
    Point {
        params: FlatParams,
        config: TrainConfig,
    },
    /// Variational posterior over the parameters.
    Posterior {
        posterior: VariationalPosterior,
        config: ViConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: Model,
    /// Seed that initialized the run this state came from.
    pub seed: u64,
    pub state: TrainedState,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("checkpoint is internally inconsistent: {0}")]
    Mismatch(String),
}

impl Checkpoint {
    pub fn point_params(&self) -> Option<&FlatParams> {
        match &self.state {
            TrainedState::Point { params, .. } => Some(params),
            TrainedState::Posterior { .. } => None,
        }
    }

    pub fn posterior(&self) -> Option<&VariationalPosterior> {
        match &self.state {
            TrainedState::Posterior { posterior, .. } => Some(posterior),
            TrainedState::Point { .. } => None,
        }
    }

    fn validate(&self) -> Result<(), CheckpointError> {
        let rebuilt = Model::assemble(
            self.model.net.clone(),
            self.model.case.clone(),
            self.model.norms.clone(),
        )?;
        if rebuilt.layout != self.model.layout {
            return Err(CheckpointError::Mismatch(
                "stored parameter index map does not match the net spec".into(),
            ));
        }
        let expected = self.model.layout.len();
        let got = match &self.state {
            TrainedState::Point { params, .. } => params.len(),
            TrainedState::Posterior { posterior, .. } => {
                if posterior.mu.len() != posterior.rho.len() {
                    return Err(CheckpointError::Mismatch(format!(
                        "posterior mu has {} entries but rho has {}",
                        posterior.mu.len(),
                        posterior.rho.len()
                    )));
                }
                posterior.len()
            }
        };
        if got != expected {
            return Err(CheckpointError::Mismatch(format!(
                "trained state has {got} parameters, net expects {expected}"
            )));
        }
        Ok(())
    }

    /// Atomic write: temp file in the same directory, then rename.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        self.validate()?;
        let json = serde_json::to_string_pretty(self)?;
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = Path::new(&tmp);
        fs::write(tmp, json.as_bytes())?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        ckpt.validate()?;
        Ok(ckpt)
    }
}
