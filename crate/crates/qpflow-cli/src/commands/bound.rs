//! `bound`: VC-style generalization bound for a trained checkpoint.
//!
//! Empirical risk is the unweighted normalized train MSE of the deployed
//! predictor (ensemble mean for posteriors) under the config's noise, the
//! capacity is the parameter count, and n is the train split size. Unlike
//! `eval`, which nulls an infeasible bound and carries on, here the bound is
//! the whole job: n ≤ h is a hard validation failure.

use super::{
    check_dims, checkpoint_path, load_dataset, load_split, risk_of, state_kind, Ctx, Predictor,
};
use crate::error::CliError;
use crate::manifest::{stamp, stamp_out, write_atomic, DirLock, RunManifest};
use qpflow::checkpoint::Checkpoint;
use qpflow::metrics::{gen_error_bound, vc_dim_estimate, GenBoundResult};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Serialize)]
struct BoundReport {
    checkpoint_kind: &'static str,
    result: GenBoundResult,
}

pub fn run(ctx: &Ctx, ck_flag: Option<&Path>) -> Result<(), CliError> {
    let _lock = DirLock::acquire(ctx.out())?;
    let t0 = Instant::now();

    let ds = load_dataset(ctx.out())?;
    let ck_path = checkpoint_path(ctx, ck_flag);
    let ck = Checkpoint::load(&ck_path)?;
    check_dims(&ck.model, &ds.meta)?;
    let (train_ds, _) = load_split(ctx, &ds)?;
    let model = &ck.model;

    let draws = ctx
        .cfg
        .trainer
        .as_ref()
        .map(|t| t.predict_draws)
        .unwrap_or(20);
    let pred = Predictor::from_checkpoint(&ck, draws, ctx.seeds.predict);
    let train_pairs = model.normalize_batch(&train_ds.samples);
    let risk = risk_of(model, &pred, &train_pairs, ctx.cfg.noise.as_ref())?;

    let h = vc_dim_estimate(model);
    let n = train_ds.samples.len();
    let result = gen_error_bound(h, n, ctx.cfg.metrics.delta, risk).map_err(|e| {
        CliError::validation(format!(
            "bound is infeasible for this split (h = {h} parameters, n = {n} train samples): {e}"
        ))
    })?;
    let report = BoundReport {
        checkpoint_kind: state_kind(&ck),
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::validation(format!("bound serialization: {e}")))?;
    text.push('\n');
    write_atomic(&ctx.out().join("bound.json"), &text)?;
    eprintln!(
        "bound: risk {:.6e} + complexity {:.6e} = {:.6e} (h={h}, n={n})",
        report.result.empirical_risk, report.result.complexity_term, report.result.bound
    );

    RunManifest {
        command: "bound",
        seeds: &ctx.seeds,
        config: &ctx.cfg,
        inputs: vec![
            stamp(&ctx.config_path, &ctx.config_path)?,
            stamp_out(ctx.out(), "data.csv")?,
            stamp_out(ctx.out(), "data.meta.json")?,
            stamp(&ck_path, &ck_path)?,
        ],
        outputs: vec![stamp_out(ctx.out(), "bound.json")?],
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    }
    .write(ctx.out())?;
    Ok(())
}
