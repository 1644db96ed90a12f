//! `edim`: effective dimension of the checkpointed architecture.
//!
//! The estimate depends on the model's shape and the train split's Fisher
//! geometry, not on the trained parameter values: parameter sets are drawn
//! from the capacity box around the architecture. The checkpoint supplies
//! the architecture and norms so the number describes the model actually
//! trained in this directory.

use super::{check_dims, checkpoint_path, load_dataset, load_split, Ctx};
use crate::error::CliError;
use crate::manifest::{stamp, stamp_out, write_atomic, DirLock, RunManifest};
use qpflow::checkpoint::Checkpoint;
use qpflow::metrics::{effective_dimension, vc_dim_estimate, zeta, EffDimConfig, EffDimResult};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Serialize)]
struct EdimReport {
    zeta: f64,
    vc_dim: usize,
    result: EffDimResult,
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
    let train_pairs = model.normalize_batch(&train_ds.samples);

    let mc = &ctx.cfg.metrics;
    let ed_cfg = EffDimConfig {
        gamma: mc.gamma,
        n: train_ds.samples.len(),
        draws: mc.draws,
        classical_bound: mc.classical_bound,
        include_classical: mc.include_classical,
        seed: ctx.seeds.metrics,
    };
    let result = effective_dimension(model, &train_pairs, &ed_cfg)?;
    let report = EdimReport {
        zeta: zeta(mc.gamma, train_ds.samples.len()),
        vc_dim: vc_dim_estimate(model),
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::validation(format!("edim serialization: {e}")))?;
    text.push('\n');
    write_atomic(&ctx.out().join("edim.json"), &text)?;
    eprintln!(
        "edim: d_eff {:.3} of {} parameters (normalized {:.4})",
        report.result.d_eff_raw,
        report.vc_dim,
        report.result.d_eff_normalized
    );

    RunManifest {
        command: "edim",
        seeds: &ctx.seeds,
        config: &ctx.cfg,
        inputs: vec![
            stamp(&ctx.config_path, &ctx.config_path)?,
            stamp_out(ctx.out(), "data.csv")?,
            stamp_out(ctx.out(), "data.meta.json")?,
            stamp(&ck_path, &ck_path)?,
        ],
        outputs: vec![stamp_out(ctx.out(), "edim.json")?],
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    }
    .write(ctx.out())?;
    Ok(())
}
