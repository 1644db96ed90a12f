//! Regression datasets: normalization, train/test splitting, file round trip.
//!
//! A sample pairs net bus injections (the regression input, 2n values) with
//! the operating point that produced them (the target: n magnitudes, n
//! angles, then per-branch from-side P and Q). Samples are held raw;
//! [`Norms`] carries the per-feature affine map `x ↦ (x − mean)/scale`
//! fitted on whatever split acts as training data. Scale is the population
//! standard deviation, with constant features pinned to scale 1 so the
//! map stays invertible.
//!
//! On disk a dataset is a header CSV of normalized rows plus a JSON sidecar
//! holding the normalization constants and the generating configuration.

use super::scenario::ScenarioConfig;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("sidecar json: {0}")]
    Sidecar(#[from] serde_json::Error),
    #[error("{path}:{line}: {what}")]
    Parse {
        path: String,
        line: usize,
        what: String,
    },
    #[error("dataset is empty")]
    Empty,
    #[error("sample {index} has {got} {kind} values, expected {expected}")]
    DimMismatch {
        index: usize,
        kind: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("need at least 2 samples to split, have {n}")]
    TooFewSamples { n: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {fraction}")]
    BadFraction { fraction: f64 },
}

/// One raw (un-normalized) regression pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Per-bus net injections: all P_i, then all Q_i (p.u.).
    pub input: Vec<f64>,
    /// V (p.u.), φ (rad), then from-side branch P and Q (p.u.).
    pub target: Vec<f64>,
}

/// Per-feature standardization constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub target_mean: Vec<f64>,
    pub target_scale: Vec<f64>,
}

/// Features with population std below this are treated as constant.
const CONST_FEATURE_EPS: f64 = 1e-12;

fn fit_columns(rows: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let dim = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; dim];
    for row in rows {
        for ((v, x), m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
            *v += (x - m) * (x - m);
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s < CONST_FEATURE_EPS {
                1.0
            } else {
                s
            }
        })
        .collect();
    (mean, scale)
}

fn affine(raw: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    raw.iter()
        .zip(mean)
        .zip(scale)
        .map(|((x, m), s)| (x - m) / s)
        .collect()
}

fn affine_inv(norm: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    norm.iter()
        .zip(mean)
        .zip(scale)
        .map(|((z, m), s)| z * s + m)
        .collect()
}

impl Norms {
    /// Fits means and scales on the given raw samples.
    pub fn fit(samples: &[Sample]) -> Norms {
        let inputs: Vec<&[f64]> = samples.iter().map(|s| s.input.as_slice()).collect();
        let targets: Vec<&[f64]> = samples.iter().map(|s| s.target.as_slice()).collect();
        let (input_mean, input_scale) = fit_columns(&inputs);
        let (target_mean, target_scale) = fit_columns(&targets);
        Norms {
            input_mean,
            input_scale,
            target_mean,
            target_scale,
        }
    }

    pub fn normalize_input(&self, raw: &[f64]) -> Vec<f64> {
        affine(raw, &self.input_mean, &self.input_scale)
    }

    pub fn denormalize_input(&self, norm: &[f64]) -> Vec<f64> {
        affine_inv(norm, &self.input_mean, &self.input_scale)
    }

    pub fn normalize_target(&self, raw: &[f64]) -> Vec<f64> {
        affine(raw, &self.target_mean, &self.target_scale)
    }

    pub fn denormalize_target(&self, norm: &[f64]) -> Vec<f64> {
        affine_inv(norm, &self.target_mean, &self.target_scale)
    }
}

/// Provenance recorded alongside the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n_bus: usize,
    pub n_branch: usize,
    /// Generating configuration, if the data came from the sampler.
    pub scenario: Option<ScenarioConfig>,
    /// Discarded unconverged draws during generation.
    #[serde(default)]
    pub redraws: usize,
}

/// An immutable set of samples with its normalization constants.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub norms: Norms,
    pub meta: DatasetMeta,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    meta: DatasetMeta,
    norms: Norms,
}

impl Dataset {
    /// Builds a dataset from raw samples, fitting norms over all of them.
    pub fn from_raw(samples: Vec<Sample>, meta: DatasetMeta) -> Result<Dataset, DatasetError> {
        if samples.is_empty() {
            return Err(DatasetError::Empty);
        }
        let (in_dim, tg_dim) = (samples[0].input.len(), samples[0].target.len());
        for (index, s) in samples.iter().enumerate() {
            if s.input.len() != in_dim {
                return Err(DatasetError::DimMismatch {
                    index,
                    kind: "input",
                    got: s.input.len(),
                    expected: in_dim,
                });
            }
            if s.target.len() != tg_dim {
                return Err(DatasetError::DimMismatch {
                    index,
                    kind: "target",
                    got: s.target.len(),
                    expected: tg_dim,
                });
            }
        }
        let norms = Norms::fit(&samples);
        Ok(Dataset {
            samples,
            norms,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.samples[0].input.len()
    }

    pub fn target_dim(&self) -> usize {
        self.samples[0].target.len()
    }

    pub fn normalized_input(&self, i: usize) -> Vec<f64> {
        self.norms.normalize_input(&self.samples[i].input)
    }

    pub fn normalized_target(&self, i: usize) -> Vec<f64> {
        self.norms.normalize_target(&self.samples[i].target)
    }

    /// Writes the data CSV (normalized rows) and its JSON sidecar.
    pub fn write_files(&self, data_path: &Path, sidecar_path: &Path) -> Result<(), DatasetError> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source| DatasetError::Io { path, source }
        };
        let (n, nb) = (self.meta.n_bus, self.meta.n_branch);
        let mut text = String::new();
        let mut cols: Vec<String> = Vec::new();
        for p in ["p", "q"] {
            cols.extend((0..n).map(|i| format!("{p}{i}")));
        }
        for t in ["v", "phi"] {
            cols.extend((0..n).map(|i| format!("{t}{i}")));
        }
        for t in ["pf", "qf"] {
            cols.extend((0..nb).map(|i| format!("{t}{i}")));
        }
        text.push_str(&cols.join(","));
        text.push('\n');
        for i in 0..self.len() {
            let mut row = self.normalized_input(i);
            row.extend(self.normalized_target(i));
            let mut line = String::new();
            for (k, x) in row.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                // Display for f64 round-trips exactly, keeping files reproducible.
                write!(line, "{x}").expect("write to String");
            }
            text.push_str(&line);
            text.push('\n');
        }
        fs::write(data_path, text).map_err(io_err(data_path))?;
        let sidecar = Sidecar {
            meta: self.meta.clone(),
            norms: self.norms.clone(),
        };
        fs::write(sidecar_path, serde_json::to_string_pretty(&sidecar)?)
            .map_err(io_err(sidecar_path))?;
        Ok(())
    }

    /// Reads a CSV + sidecar pair written by [`Dataset::write_files`].
    pub fn read_files(data_path: &Path, sidecar_path: &Path) -> Result<Dataset, DatasetError> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source| DatasetError::Io { path, source }
        };
        let sidecar: Sidecar = serde_json::from_str(
            &fs::read_to_string(sidecar_path).map_err(io_err(sidecar_path))?,
        )?;
        let text = fs::read_to_string(data_path).map_err(io_err(data_path))?;
        let path = data_path.display().to_string();
        let in_dim = 2 * sidecar.meta.n_bus;
        let tg_dim = 2 * sidecar.meta.n_bus + 2 * sidecar.meta.n_branch;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| DatasetError::Parse {
            path: path.clone(),
            line: 1,
            what: "missing header".into(),
        })?;
        let n_cols = header.split(',').count();
        if n_cols != in_dim + tg_dim {
            return Err(DatasetError::Parse {
                path,
                line: 1,
                what: format!("{n_cols} columns, sidecar implies {}", in_dim + tg_dim),
            });
        }
        let mut samples = Vec::new();
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(n_cols);
            for field in line.split(',') {
                let x: f64 = field.parse().map_err(|_| DatasetError::Parse {
                    path: path.clone(),
                    line: idx + 1,
                    what: format!("bad float {field:?}"),
                })?;
                row.push(x);
            }
            if row.len() != n_cols {
                return Err(DatasetError::Parse {
                    path,
                    line: idx + 1,
                    what: format!("{} fields, expected {n_cols}", row.len()),
                });
            }
            samples.push(Sample {
                input: sidecar.norms.denormalize_input(&row[..in_dim]),
                target: sidecar.norms.denormalize_target(&row[in_dim..]),
            });
        }
        if samples.is_empty() {
            return Err(DatasetError::Empty);
        }
        Ok(Dataset {
            samples,
            norms: sidecar.norms,
            meta: sidecar.meta,
        })
    }
}

/// Randomly partitions a dataset, refitting norms on the training part and
/// giving the test part the same constants.
pub fn split_dataset(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DatasetError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let n = ds.len();
    if n < 2 {
        return Err(DatasetError::TooFewSamples { n });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::BadFraction {
            fraction: train_fraction,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let k = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let collect = |idx: &[usize]| -> Vec<Sample> {
        idx.iter().map(|&i| ds.samples[i].clone()).collect()
    };
    let train_samples = collect(&order[..k]);
    let test_samples = collect(&order[k..]);
    let norms = Norms::fit(&train_samples);
    let train = Dataset {
        samples: train_samples,
        norms: norms.clone(),
        meta: ds.meta.clone(),
    };
    let test = Dataset {
        samples: test_samples,
        norms,
        meta: ds.meta.clone(),
    };
    Ok((train, test))
}
