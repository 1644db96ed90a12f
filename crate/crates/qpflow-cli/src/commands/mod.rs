//! Subcommand implementations and the plumbing they share.
//!
//! Each command runs inside one output directory: acquire the lock, read
//! inputs, compute, write artifacts, and finish with a manifest naming and
//! hashing everything. Evaluation-style commands reconstruct the predictor
//! from a checkpoint: a point estimate predicts with a single forward pass, a
//! variational posterior with the mean of `S` parameter draws. The draws are
//! made once per run from the predict seed and shared across all inputs, so
//! results do not depend on evaluation order.

pub mod bound;
pub mod edim;
pub mod eval;
pub mod gen;
pub mod sweep;
pub mod train;

use crate::config::{ExperimentConfig, SeedLadder};
use crate::error::CliError;
use qpflow::checkpoint::{Checkpoint, TrainedState};
use qpflow::metrics::{accuracy_report, empirical_risk, AccuracyReport, MetricsError};
use qpflow::model::{Differentiable, FlatParams, Model, ModelError, NormPair};
use qpflow::powerflow::{split_dataset, Dataset, DatasetMeta, PowerCase};
use qpflow::quantum::NoiseSpec;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

/// Resolved invocation: effective config, derived seeds, source paths.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub seeds: SeedLadder,
    pub config_path: PathBuf,
}

impl Ctx {
    pub fn out(&self) -> &Path {
        &self.cfg.out_dir
    }
}

pub(crate) fn load_case(ctx: &Ctx) -> Result<PowerCase, CliError> {
    PowerCase::from_path(&ctx.cfg.case_path).map_err(Into::into)
}

pub(crate) fn load_dataset(out: &Path) -> Result<Dataset, CliError> {
    let data = out.join("data.csv");
    let meta = out.join("data.meta.json");
    if !data.is_file() || !meta.is_file() {
        return Err(CliError::validation(format!(
            "{}: dataset not found (run `gen` into this directory first)",
            data.display()
        )));
    }
    Dataset::read_files(&data, &meta).map_err(Into::into)
}

pub(crate) fn load_split(ctx: &Ctx, ds: &Dataset) -> Result<(Dataset, Dataset), CliError> {
    split_dataset(ds, ctx.cfg.split.train_fraction, ctx.seeds.split).map_err(Into::into)
}

pub(crate) fn checkpoint_path(ctx: &Ctx, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.out().join("checkpoint.json"))
}

pub(crate) fn check_dims(model: &Model, meta: &DatasetMeta) -> Result<(), CliError> {
    if model.n_bus() != meta.n_bus || model.n_branch() != meta.n_branch {
        return Err(CliError::validation(format!(
            "checkpoint does not match dataset: model covers {} buses / {} branches, \
             dataset has {} / {}",
            model.n_bus(),
            model.n_branch(),
            meta.n_bus,
            meta.n_branch
        )));
    }
    Ok(())
}

pub(crate) fn state_kind(ck: &Checkpoint) -> &'static str {
    match ck.state {
        TrainedState::Point { .. } => "point",
        TrainedState::Posterior { .. } => "posterior",
    }
}

/// Checkpoint turned into a callable predictor.
pub(crate) enum Predictor {
    Point(FlatParams),
    Ensemble(Vec<FlatParams>),
}

impl Predictor {
    /// `draws` parameter sets come from the predict seed for posteriors;
    /// point checkpoints ignore both.
    pub fn from_checkpoint(ck: &Checkpoint, draws: usize, seed: u64) -> Self {
        match &ck.state {
            TrainedState::Point { params, .. } => Predictor::Point(params.clone()),
            TrainedState::Posterior { posterior, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let thetas = (0..draws)
                    .map(|_| {
                        let eps = posterior.draw_eps(&mut rng);
                        posterior.apply_eps(&eps)
                    })
                    .collect();
                Predictor::Ensemble(thetas)
            }
        }
    }

    /// Normalized-space output: one forward pass, or the ensemble mean.
    pub fn output_norm(
        &self,
        model: &Model,
        xn: &[f64],
        noise: Option<&NoiseSpec>,
    ) -> Result<Vec<f64>, ModelError> {
        match self {
            Predictor::Point(p) => model.output(p, xn, noise),
            Predictor::Ensemble(thetas) => {
                let mut mean = model.output(&thetas[0], xn, noise)?;
                for theta in &thetas[1..] {
                    let out = model.output(theta, xn, noise)?;
                    for (m, v) in mean.iter_mut().zip(out) {
                        *m += v;
                    }
                }
                let k = thetas.len() as f64;
                for m in &mut mean {
                    *m /= k;
                }
                Ok(mean)
            }
        }
    }

    /// Physical-units prediction from a physical-units input.
    pub fn predict_physical(
        &self,
        model: &Model,
        x: &[f64],
        noise: Option<&NoiseSpec>,
    ) -> Result<Vec<f64>, ModelError> {
        let xn = model.norms.normalize_input(x);
        let out = self.output_norm(model, &xn, noise)?;
        Ok(model.norms.denormalize_target(&out))
    }
}

pub(crate) fn accuracy_of(
    model: &Model,
    pred: &Predictor,
    samples: &[qpflow::powerflow::Sample],
    noise: Option<&NoiseSpec>,
) -> Result<AccuracyReport, CliError> {
    accuracy_report(
        |x| {
            pred.predict_physical(model, x, noise)
                .map_err(MetricsError::from)
        },
        samples,
        &model.case,
    )
    .map_err(Into::into)
}

pub(crate) fn risk_of(
    model: &Model,
    pred: &Predictor,
    pairs: &[NormPair],
    noise: Option<&NoiseSpec>,
) -> Result<f64, CliError> {
    empirical_risk(
        |x| pred.output_norm(model, x, noise).map_err(MetricsError::from),
        pairs,
    )
    .map_err(Into::into)
}
