//! `eval`: accuracy, empirical risks, and capacity metrics of a checkpoint.
//!
//! Accuracy and risks run under the config's `noise` (absent means
//! noiseless), so the same checkpoint can be scored clean and noisy. The
//! `train_loss` field replays the trainer's own weighted loss with the
//! weights and noise stored in the checkpoint, which is why it lands on the
//! final training-log row exactly; it is null for posterior checkpoints,
//! whose logged ELBO terms are Monte Carlo draws that cannot be replayed
//! from the saved state.
//!
//! The capacity metrics have feasibility floors: the generalization bound
//! needs more train samples than parameters and the effective dimension
//! needs ζ > 1. When the split is too small for one of them, that field is
//! null and a note says why; scoring still succeeds. The dedicated `edim`
//! and `bound` subcommands treat the same conditions as hard errors.

use super::{
    accuracy_of, check_dims, checkpoint_path, load_dataset, load_split, risk_of, state_kind,
    Ctx, Predictor,
};
use crate::error::CliError;
use crate::manifest::{stamp, stamp_out, write_atomic, DirLock, RunManifest};
use qpflow::checkpoint::{Checkpoint, TrainedState};
use qpflow::metrics::{
    effective_dimension, gen_error_bound, vc_dim_estimate, AccuracyReport, EffDimConfig,
    EffDimResult, GenBoundResult,
};
use qpflow::model::batch_loss;
use qpflow::quantum::NoiseSpec;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Serialize)]
struct EvalReport {
    checkpoint_kind: &'static str,
    /// Ensemble size used for posterior checkpoints; null for point ones.
    predict_draws: Option<usize>,
    noise: Option<NoiseSpec>,
    accuracy_train: AccuracyReport,
    accuracy_test: AccuracyReport,
    /// Trainer's weighted train loss at the checkpoint; null for posteriors.
    train_loss: Option<f64>,
    /// Unweighted mean squared error in normalized units.
    empirical_risk_train: f64,
    empirical_risk_test: f64,
    /// Null when the train split is too small for ζ > 1; see the note.
    effective_dimension: Option<EffDimResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    effdim_note: Option<String>,
    vc_dim: usize,
    /// Null when the train split has no more samples than parameters.
    generalization_bound: Option<GenBoundResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_note: Option<String>,
}

pub fn run(ctx: &Ctx, ck_flag: Option<&Path>) -> Result<(), CliError> {
    let _lock = DirLock::acquire(ctx.out())?;
    let t0 = Instant::now();

    let ds = load_dataset(ctx.out())?;
    let ck_path = checkpoint_path(ctx, ck_flag);
    let ck = Checkpoint::load(&ck_path)?;
    check_dims(&ck.model, &ds.meta)?;
    let (train_ds, test_ds) = load_split(ctx, &ds)?;
    let model = &ck.model;

    let draws = ctx
        .cfg
        .trainer
        .as_ref()
        .map(|t| t.predict_draws)
        .unwrap_or(20);
    let pred = Predictor::from_checkpoint(&ck, draws, ctx.seeds.predict);
    let noise = ctx.cfg.noise.as_ref();

    let accuracy_train = accuracy_of(model, &pred, &train_ds.samples, noise)?;
    let accuracy_test = accuracy_of(model, &pred, &test_ds.samples, noise)?;

    let train_pairs = model.normalize_batch(&train_ds.samples);
    let test_pairs = model.normalize_batch(&test_ds.samples);
    let train_loss = match &ck.state {
        TrainedState::Point { params, config } => Some(batch_loss(
            model,
            params,
            &train_pairs,
            config.noise.as_ref(),
            &config.weights,
        )?),
        TrainedState::Posterior { .. } => None,
    };
    let empirical_risk_train = risk_of(model, &pred, &train_pairs, noise)?;
    let empirical_risk_test = risk_of(model, &pred, &test_pairs, noise)?;

    let mc = &ctx.cfg.metrics;
    let ed_cfg = EffDimConfig {
        gamma: mc.gamma,
        n: train_ds.samples.len(),
        draws: mc.draws,
        classical_bound: mc.classical_bound,
        include_classical: mc.include_classical,
        seed: ctx.seeds.metrics,
    };
    let (effdim, effdim_note) = match effective_dimension(model, &train_pairs, &ed_cfg) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let vc_dim = vc_dim_estimate(model);
    let (generalization_bound, bound_note) = match gen_error_bound(
        vc_dim,
        train_ds.samples.len(),
        mc.delta,
        empirical_risk_train,
    ) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let report = EvalReport {
        checkpoint_kind: state_kind(&ck),
        predict_draws: match &ck.state {
            TrainedState::Posterior { .. } => Some(draws),
            TrainedState::Point { .. } => None,
        },
        noise: ctx.cfg.noise.clone(),
        accuracy_train,
        accuracy_test,
        train_loss,
        empirical_risk_train,
        empirical_risk_test,
        effective_dimension: effdim,
        effdim_note,
        vc_dim,
        generalization_bound,
        bound_note,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::validation(format!("metrics serialization: {e}")))?;
    text.push('\n');
    write_atomic(&ctx.out().join("metrics.json"), &text)?;
    eprintln!(
        "eval: test v_mse {:.6e}, phi_dev {:.4}, p_dev {:.4} ({} checkpoint)",
        report.accuracy_test.v_mse,
        report.accuracy_test.phi_dev,
        report.accuracy_test.p_dev,
        report.checkpoint_kind
    );

    RunManifest {
        command: "eval",
        seeds: &ctx.seeds,
        config: &ctx.cfg,
        inputs: vec![
            stamp(&ctx.config_path, &ctx.config_path)?,
            stamp_out(ctx.out(), "data.csv")?,
            stamp_out(ctx.out(), "data.meta.json")?,
            stamp(&ck_path, &ck_path)?,
        ],
        outputs: vec![stamp_out(ctx.out(), "metrics.json")?],
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    }
    .write(ctx.out())?;
    Ok(())
}
