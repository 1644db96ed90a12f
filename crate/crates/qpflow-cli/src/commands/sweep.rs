//! `noise-sweep`: test accuracy as each channel's probability rises.
//!
//! One row per (channel kind, probability) over `metrics.sweep_grid`, each
//! evaluated with only that channel active. A probability of zero reproduces
//! the noiseless evaluation bit for bit, anchoring the sweep to `eval`. No
//! monotonicity is asserted; the rows are the empirical record.

use super::{
    accuracy_of, check_dims, checkpoint_path, load_dataset, load_split, Ctx, Predictor,
};
use crate::error::CliError;
use crate::manifest::{stamp, stamp_out, write_atomic, DirLock, RunManifest};
use qpflow::checkpoint::Checkpoint;
use qpflow::quantum::{ChannelKind, NoiseSpec};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

const CHANNELS: [(ChannelKind, &str); 3] = [
    (ChannelKind::BitFlip, "bit_flip"),
    (ChannelKind::PhaseFlip, "phase_flip"),
    (ChannelKind::Depolarizing, "depolarizing"),
];

pub fn run(ctx: &Ctx, ck_flag: Option<&Path>) -> Result<(), CliError> {
    let _lock = DirLock::acquire(ctx.out())?;
    let t0 = Instant::now();

    let ds = load_dataset(ctx.out())?;
    let ck_path = checkpoint_path(ctx, ck_flag);
    let ck = Checkpoint::load(&ck_path)?;
    check_dims(&ck.model, &ds.meta)?;
    let (_, test_ds) = load_split(ctx, &ds)?;
    let model = &ck.model;

    let draws = ctx
        .cfg
        .trainer
        .as_ref()
        .map(|t| t.predict_draws)
        .unwrap_or(20);
    let pred = Predictor::from_checkpoint(&ck, draws, ctx.seeds.predict);

    let mut csv = String::from("channel,p,v_mse,phi_dev,p_dev\n");
    for (kind, name) in CHANNELS {
        for &p in &ctx.cfg.metrics.sweep_grid {
            let spec = NoiseSpec::only(kind, p);
            let acc = accuracy_of(model, &pred, &test_ds.samples, Some(&spec))?;
            writeln!(csv, "{name},{p},{},{},{}", acc.v_mse, acc.phi_dev, acc.p_dev)
                .expect("string write");
            eprintln!(
                "noise-sweep: {name} p={p} v_mse {:.6e} phi_dev {:.4} p_dev {:.4}",
                acc.v_mse, acc.phi_dev, acc.p_dev
            );
        }
    }
    write_atomic(&ctx.out().join("noise_sweep.csv"), &csv)?;

    RunManifest {
        command: "noise-sweep",
        seeds: &ctx.seeds,
        config: &ctx.cfg,
        inputs: vec![
            stamp(&ctx.config_path, &ctx.config_path)?,
            stamp_out(ctx.out(), "data.csv")?,
            stamp_out(ctx.out(), "data.meta.json")?,
            stamp(&ck_path, &ck_path)?,
        ],
        outputs: vec![stamp_out(ctx.out(), "noise_sweep.csv")?],
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    }
    .write(ctx.out())?;
    Ok(())
}
