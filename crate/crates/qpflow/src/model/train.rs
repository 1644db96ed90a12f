//! Deterministic gradient-descent training.
//!
//! Plain steepest descent, `θ ← θ − lr·∇L`, full-batch by default or
//! mini-batch when `batch_size` is set (indices reshuffled every epoch from
//! the seeded generator). The log records the full train/test loss after
//! each epoch's updates; a non-finite loss aborts with the epoch number.

use super::loss::{batch_grad, batch_loss, LossWeights, NormPair};
use super::net::Model;
use super::params::FlatParams;
use super::ModelError;
use crate::powerflow::Sample;
use crate::quantum::NoiseSpec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Full-batch when `None`.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub weights: LossWeights,
    pub noise: Option<NoiseSpec>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            lr: 0.05,
            batch_size: None,
            seed: 0,
            weights: LossWeights::default(),
            noise: None,
        }
    }
}

/// Losses measured after the epoch's parameter updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<EpochRow>,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("learning rate must be nonnegative, got {lr}")]
    BadLearningRate { lr: f64 },
    #[error("mini-batch size must be at least 1")]
    BadBatchSize,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Runs gradient descent and returns the final parameters with the loss log.
///
/// `on_epoch` fires once per epoch with the row and the parameters as of
/// that epoch's end, in order; useful for mid-run evaluation or snapshots.
pub fn train_deterministic(
    model: &Model,
    params: FlatParams,
    train: &[Sample],
    test: Option<&[Sample]>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRow, &FlatParams),
) -> Result<(FlatParams, TrainLog), TrainError> {
    if !(cfg.lr >= 0.0) {
        return Err(TrainError::BadLearningRate { lr: cfg.lr });
    }
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    if cfg.batch_size == Some(0) {
        return Err(TrainError::BadBatchSize);
    }
    let train_norm = model.normalize_batch(train);
    let test_norm = test.map(|t| model.normalize_batch(t));
    let noise = cfg.noise.as_ref();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = params;
    let mut log = TrainLog::default();
    for epoch in 1..=cfg.epochs {
        match cfg.batch_size {
            None => {
                let (_, grad) = batch_grad(model, &params, &train_norm, noise, &cfg.weights)?;
                step(&mut params, &grad, cfg.lr);
            }
            Some(size) => {
                let mut order: Vec<usize> = (0..train_norm.len()).collect();
                order.shuffle(&mut rng);
                for chunk in order.chunks(size) {
                    let mini: Vec<NormPair> =
                        chunk.iter().map(|&i| train_norm[i].clone()).collect();
                    let (_, grad) = batch_grad(model, &params, &mini, noise, &cfg.weights)?;
                    step(&mut params, &grad, cfg.lr);
                }
            }
        }
        let train_loss = batch_loss(model, &params, &train_norm, noise, &cfg.weights)?;
        let test_loss = match &test_norm {
            Some(t) => Some(batch_loss(model, &params, t, noise, &cfg.weights)?),
            None => None,
        };
        if !train_loss.is_finite() || test_loss.is_some_and(|t| !t.is_finite()) {
            return Err(TrainError::Diverged { epoch });
        }
        let row = EpochRow {
            epoch,
            train_loss,
            test_loss,
        };
        on_epoch(&row, &params);
        log.rows.push(row);
    }
    Ok((params, log))
}

fn step(params: &mut FlatParams, grad: &[f64], lr: f64) {
    for (p, g) in params.values.iter_mut().zip(grad) {
        *p -= lr * g;
    }
}
