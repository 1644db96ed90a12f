//! `gen`: sample operating scenarios and write the dataset.

use super::{load_case, Ctx};
use crate::error::CliError;
use crate::manifest::{stamp, stamp_out, DirLock, RunManifest};
use qpflow::powerflow::sample_scenarios_with_stats;
use std::time::Instant;

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let _lock = DirLock::acquire(ctx.out())?;
    let t0 = Instant::now();

    let case = load_case(ctx)?;
    let mut scen = ctx.cfg.scenario.clone();
    scen.seed = ctx.seeds.scenario;
    let (ds, stats) = sample_scenarios_with_stats(&case, &scen)?;

    let data = ctx.out().join("data.csv");
    let meta = ctx.out().join("data.meta.json");
    ds.write_files(&data, &meta)?;
    eprintln!(
        "gen: {} samples from {} ({} redraws, mean renewable share {:.3})",
        ds.samples.len(),
        ctx.cfg.case_path.display(),
        stats.redraws,
        stats.mean_renewable_share
    );

    RunManifest {
        command: "gen",
        seeds: &ctx.seeds,
        config: &ctx.cfg,
        inputs: vec![
            stamp(&ctx.config_path, &ctx.config_path)?,
            stamp(&ctx.cfg.case_path, &ctx.cfg.case_path)?,
        ],
        outputs: vec![
            stamp_out(ctx.out(), "data.csv")?,
            stamp_out(ctx.out(), "data.meta.json")?,
        ],
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    }
    .write(ctx.out())?;
    Ok(())
}
