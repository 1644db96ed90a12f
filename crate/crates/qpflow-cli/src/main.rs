//! Batch driver for hybrid quantum power-flow experiments.
//!
//! One config JSON describes a run; subcommands move it through the
//! pipeline: `gen` samples scenarios into a dataset, `train` fits a model,
//! `eval` scores a checkpoint, `noise-sweep` maps accuracy against channel
//! probability, and `edim`/`bound` compute the capacity metrics alone.
//! Exit codes: 0 success, 2 anything a config or path edit can fix, 3 a
//! numerical failure mid-run (divergence, solver exhaustion).

mod commands;
mod config;
mod error;
mod manifest;

use clap::{Args, Parser, Subcommand};
use commands::Ctx;
use config::ExperimentConfig;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qpflow",
    version,
    about = "Hybrid quantum power-flow regression experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config JSON.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Base seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WithCheckpoint {
    #[command(flatten)]
    common: Common,
    /// Checkpoint path; defaults to `<out>/checkpoint.json`. For `train`
    /// this resumes from the given state instead of initializing fresh.
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample operating scenarios and write the dataset.
    Gen(Common),
    /// Train a model on the train split; `--checkpoint` resumes.
    Train(WithCheckpoint),
    /// Score a checkpoint: accuracy, risks, capacity metrics.
    Eval(WithCheckpoint),
    /// Test accuracy per noise channel across a probability grid.
    NoiseSweep(WithCheckpoint),
    /// Effective dimension of the checkpointed architecture.
    Edim(WithCheckpoint),
    /// VC-style generalization bound at the checkpoint.
    Bound(WithCheckpoint),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, checkpoint) = match &cli.cmd {
        Cmd::Gen(c) => (c, None),
        Cmd::Train(w) | Cmd::Eval(w) | Cmd::NoiseSweep(w) | Cmd::Edim(w) | Cmd::Bound(w) => {
            (&w.common, w.checkpoint.as_deref())
        }
    };
    let cfg = ExperimentConfig::load(&common.config)?;
    let (cfg, seeds) = cfg.resolve(common.seed, common.out.clone());
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::validation(format!("{}: {e}", cfg.out_dir.display())))?;
    let ctx = Ctx {
        cfg,
        seeds,
        config_path: common.config.clone(),
    };

    match &cli.cmd {
        Cmd::Gen(_) => commands::gen::run(&ctx),
        Cmd::Train(_) => commands::train::run(&ctx, checkpoint),
        Cmd::Eval(_) => commands::eval::run(&ctx, checkpoint),
        Cmd::NoiseSweep(_) => commands::sweep::run(&ctx, checkpoint),
        Cmd::Edim(_) => commands::edim::run(&ctx, checkpoint),
        Cmd::Bound(_) => commands::bound::run(&ctx, checkpoint),
    }
}
