//! `train`: fit a model on the train split and write checkpoint + log.
//!
//! Fresh runs build the model from the config's `model` section, with norms
//! fitted on the train split. `--checkpoint` resumes instead: the model and
//! state come from the checkpoint (whose kind must match the configured
//! algorithm), this run's epochs are appended to the stored cumulative count,
//! and log rows continue the epoch numbering. Each run writes its own rows
//! only, so the same invocation always produces the same file.
//!
//! A divergence keeps the last finite-loss epoch as the checkpoint and the
//! rows up to it in the log, then exits with the numerical failure code.

use super::{check_dims, load_case, load_dataset, load_split, Ctx};
use crate::config::{Algorithm, ModelKind, TrainerSection};
use crate::error::CliError;
use crate::manifest::{stamp, stamp_out, write_atomic, DirLock, RunManifest};
use qpflow::bayes::{
    train_vi, train_vi_from, BayesError, PriorSpec, ViConfig, ViRow, VariationalPosterior,
};
use qpflow::checkpoint::{Checkpoint, TrainedState};
use qpflow::model::{
    train_deterministic, EpochRow, FlatParams, Model, TrainConfig, TrainError,
};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

pub fn run(ctx: &Ctx, checkpoint_flag: Option<&Path>) -> Result<(), CliError> {
    let _lock = DirLock::acquire(ctx.out())?;
    let t0 = Instant::now();

    let trainer = ctx.cfg.trainer_section()?.clone();
    let ds = load_dataset(ctx.out())?;
    let (train_ds, test_ds) = load_split(ctx, &ds)?;

    // Stamp the resume source before training can overwrite it in place.
    let resume_stamp = match checkpoint_flag {
        Some(p) => Some(stamp(p, p)?),
        None => None,
    };
    let resume = match checkpoint_flag {
        Some(p) => Some((Checkpoint::load(p)?, p)),
        None => None,
    };

    // Fresh runs take the architecture from the config and the norms from
    // the train split; resumed runs take both from the checkpoint.
    let (model, init_seed) = match &resume {
        Some((ck, _)) => (ck.model.clone(), ck.seed),
        None => {
            let case = load_case(ctx)?;
            if case.n_bus() != ds.meta.n_bus {
                return Err(CliError::validation(format!(
                    "case/dataset mismatch: case has {} buses, dataset {}",
                    case.n_bus(),
                    ds.meta.n_bus
                )));
            }
            let ms = ctx.cfg.model_section()?;
            let model = match ms.kind {
                ModelKind::Hybrid => {
                    Model::new_hybrid(case, train_ds.norms.clone(), ms.m, ms.layers)?
                }
                ModelKind::Mlp => Model::new_mlp(case, train_ds.norms.clone(), &ms.widths)?,
            };
            (model, ctx.seeds.trainer)
        }
    };
    check_dims(&model, &ds.meta)?;

    let log_path = ctx.out().join("train_log.csv");
    let ck_path = ctx.out().join("checkpoint.json");
    match trainer.algorithm {
        Algorithm::Deterministic => run_point(
            ctx, &trainer, &model, &train_ds, &test_ds, resume, init_seed, &log_path, &ck_path,
        )?,
        Algorithm::Variational => run_vi(
            ctx, &trainer, &model, &train_ds, resume, init_seed, &log_path, &ck_path,
        )?,
    }

    let mut inputs = vec![
        stamp(&ctx.config_path, &ctx.config_path)?,
        stamp(&ctx.cfg.case_path, &ctx.cfg.case_path)?,
        stamp_out(ctx.out(), "data.csv")?,
        stamp_out(ctx.out(), "data.meta.json")?,
    ];
    if let Some(s) = resume_stamp {
        inputs.push(s);
    }
    RunManifest {
        command: "train",
        seeds: &ctx.seeds,
        config: &ctx.cfg,
        inputs,
        outputs: vec![
            stamp_out(ctx.out(), "train_log.csv")?,
            stamp_out(ctx.out(), "checkpoint.json")?,
        ],
        wall_clock_seconds: t0.elapsed().as_secs_f64(),
    }
    .write(ctx.out())?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_point(
    ctx: &Ctx,
    trainer: &TrainerSection,
    model: &Model,
    train_ds: &qpflow::powerflow::Dataset,
    test_ds: &qpflow::powerflow::Dataset,
    resume: Option<(Checkpoint, &Path)>,
    init_seed: u64,
    log_path: &Path,
    ck_path: &Path,
) -> Result<(), CliError> {
    let (init, prev_epochs) = match resume {
        None => (model.init_params(ctx.seeds.trainer), 0),
        Some((ck, p)) => match ck.state {
            TrainedState::Point { params, config } => (params, config.epochs),
            TrainedState::Posterior { .. } => {
                return Err(CliError::validation(format!(
                    "{}: checkpoint holds a variational posterior but \
                     trainer.algorithm is \"deterministic\"",
                    p.display()
                )))
            }
        },
    };
    let tc = TrainConfig {
        epochs: trainer.epochs,
        lr: trainer.lr,
        batch_size: trainer.batch_size,
        seed: ctx.seeds.trainer,
        weights: trainer.weights.clone(),
        noise: ctx.cfg.noise.clone(),
    };

    let every = progress_stride(trainer.epochs);
    let mut rows: Vec<EpochRow> = Vec::with_capacity(trainer.epochs);
    let mut last_good: Option<(usize, FlatParams)> = None;
    let result = train_deterministic(
        model,
        init,
        &train_ds.samples,
        Some(&test_ds.samples),
        &tc,
        |row, params| {
            rows.push(EpochRow {
                epoch: prev_epochs + row.epoch,
                ..*row
            });
            last_good = Some((row.epoch, params.clone()));
            if row.epoch % every == 0 {
                eprintln!(
                    "train: epoch {} train_loss {:.6e}",
                    prev_epochs + row.epoch,
                    row.train_loss
                );
            }
        },
    );

    let save = |epochs_done: usize, params: FlatParams| -> Result<(), CliError> {
        Checkpoint {
            model: model.clone(),
            seed: init_seed,
            state: TrainedState::Point {
                params,
                config: TrainConfig {
                    epochs: prev_epochs + epochs_done,
                    ..tc.clone()
                },
            },
        }
        .save(ck_path)
        .map_err(Into::into)
    };

    match result {
        Ok((params, _)) => {
            write_point_log(log_path, &rows)?;
            save(trainer.epochs, params)?;
            Ok(())
        }
        Err(TrainError::Diverged { epoch }) => {
            write_point_log(log_path, &rows)?;
            if let Some((done, params)) = last_good {
                save(done, params)?;
                eprintln!(
                    "train: diverged at epoch {}; kept checkpoint at epoch {}",
                    prev_epochs + epoch,
                    prev_epochs + done
                );
            }
            Err(TrainError::Diverged {
                epoch: prev_epochs + epoch,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_vi(
    ctx: &Ctx,
    trainer: &TrainerSection,
    model: &Model,
    train_ds: &qpflow::powerflow::Dataset,
    resume: Option<(Checkpoint, &Path)>,
    init_seed: u64,
    log_path: &Path,
    ck_path: &Path,
) -> Result<(), CliError> {
    let (start, prev_epochs) = match resume {
        None => (None, 0),
        Some((ck, p)) => match ck.state {
            TrainedState::Posterior { posterior, config } => {
                (Some(posterior), config.epochs)
            }
            TrainedState::Point { .. } => {
                return Err(CliError::validation(format!(
                    "{}: checkpoint holds a point estimate but \
                     trainer.algorithm is \"variational\"",
                    p.display()
                )))
            }
        },
    };
    let vc = ViConfig {
        epochs: trainer.epochs,
        lr: trainer.lr,
        mc_samples: trainer.mc_samples,
        seed: ctx.seeds.trainer,
        scope: trainer.scope,
        sigma_obs: trainer.sigma_obs,
        init_sigma: trainer.init_sigma,
        prior: PriorSpec::default(),
        noise: ctx.cfg.noise.clone(),
    };

    let every = progress_stride(trainer.epochs);
    let mut rows: Vec<ViRow> = Vec::with_capacity(trainer.epochs);
    let mut last_good: Option<(usize, VariationalPosterior)> = None;
    let on_epoch = |row: &ViRow, post: &VariationalPosterior| {
        rows.push(ViRow {
            epoch: prev_epochs + row.epoch,
            ..*row
        });
        last_good = Some((row.epoch, post.clone()));
        if row.epoch % every == 0 {
            eprintln!(
                "train: epoch {} elbo {:.6e}",
                prev_epochs + row.epoch,
                row.elbo
            );
        }
    };
    let result = match start {
        None => train_vi(model, &train_ds.samples, &vc, on_epoch),
        Some(post) => train_vi_from(model, &train_ds.samples, post, &vc, on_epoch),
    };

    let save = |epochs_done: usize, posterior: VariationalPosterior| -> Result<(), CliError> {
        Checkpoint {
            model: model.clone(),
            seed: init_seed,
            state: TrainedState::Posterior {
                posterior,
                config: ViConfig {
                    epochs: prev_epochs + epochs_done,
                    ..vc.clone()
                },
            },
        }
        .save(ck_path)
        .map_err(Into::into)
    };

    match result {
        Ok((posterior, _)) => {
            write_vi_log(log_path, &rows)?;
            save(trainer.epochs, posterior)?;
            Ok(())
        }
        Err(e @ (BayesError::Diverged { .. } | BayesError::NonFinite)) => {
            write_vi_log(log_path, &rows)?;
            if let Some((done, posterior)) = last_good {
                save(done, posterior)?;
                eprintln!("train: aborted ({e}); kept checkpoint at epoch {}", prev_epochs + done);
            }
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn progress_stride(epochs: usize) -> usize {
    (epochs / 10).max(1)
}

fn write_point_log(path: &Path, rows: &[EpochRow]) -> Result<(), CliError> {
    let mut s = String::from("epoch,train_loss,test_loss\n");
    for r in rows {
        let test = r.test_loss.map(|t| t.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{}", r.epoch, r.train_loss, test).expect("string write");
    }
    write_atomic(path, &s)
}

fn write_vi_log(path: &Path, rows: &[ViRow]) -> Result<(), CliError> {
    let mut s = String::from("epoch,elbo,kl,log_lik\n");
    for r in rows {
        writeln!(s, "{},{},{},{}", r.epoch, r.elbo, r.kl, r.log_lik).expect("string write");
    }
    write_atomic(path, &s)
}
