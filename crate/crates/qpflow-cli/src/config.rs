//! Experiment configuration: one JSON file describes a whole run.
//!
//! A config names the grid case, how scenarios are sampled, the model shape,
//! the trainer, optional gate noise, and the capacity-metric settings. Every
//! numeric field is range-checked up front and rejected with its field path,
//! so a bad config never reaches the solvers.
//!
//! Seeds derive from one base value (the `--seed` flag wins over the config):
//! consecutive offsets give each stage (scenario sampling, splitting,
//! training, metric draws, predictive draws) its own stream, so rerunning any
//! command with the same base reproduces it bit for bit. A nonzero
//! `scenario.seed` pins the sampling stream independently of the base.

use crate::error::CliError;
use qpflow::bayes::ViScope;
use qpflow::model::LossWeights;
use qpflow::powerflow::ScenarioConfig;
use qpflow::quantum::{NoiseSpec, MAX_QUBITS};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Grid case JSON (buses, branches, generators).
    pub case_path: PathBuf,
    /// Base seed for the whole run; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    /// Every artifact lands under this directory; `--out` overrides it.
    pub out_dir: PathBuf,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub trainer: Option<TrainerSection>,
    /// Per-gate channel probabilities applied wherever the model runs;
    /// absent means noiseless.
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub metrics: MetricsSection,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train_fraction: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Dense encoder, variational circuit, dense decoder.
    Hybrid,
    /// Classical dense stack of the same interface.
    Mlp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    /// Qubit count of the hybrid circuit.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Variational layer count of the hybrid circuit.
    #[serde(default = "default_layers")]
    pub layers: usize,
    /// Hidden widths of the MLP variant.
    #[serde(default = "default_widths")]
    pub widths: Vec<usize>,
}

fn default_m() -> usize {
    4
}
fn default_layers() -> usize {
    2
}
fn default_widths() -> Vec<usize> {
    vec![16]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Plain gradient descent to a point estimate.
    Deterministic,
    /// Mean-field variational inference over the parameters.
    Variational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerSection {
    pub algorithm: Algorithm,
    pub epochs: usize,
    pub lr: f64,
    /// Full-batch when absent.
    #[serde(default)]
    pub batch_size: Option<usize>,
    /// ELBO Monte Carlo draws per step (M).
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    /// Predictive ensemble size at evaluation (S).
    #[serde(default = "default_draws")]
    pub predict_draws: usize,
    /// Observation noise scale of the Gaussian likelihood.
    #[serde(default = "default_sigma_obs")]
    pub sigma_obs: f64,
    /// Initial posterior width around the point initialization.
    #[serde(default = "default_init_sigma")]
    pub init_sigma: f64,
    /// Which parameters the posterior covers.
    #[serde(default = "default_scope")]
    pub scope: ViScope,
    #[serde(default)]
    pub weights: LossWeights,
}

fn default_mc() -> usize {
    2
}
fn default_draws() -> usize {
    20
}
fn default_sigma_obs() -> f64 {
    0.05
}
fn default_init_sigma() -> f64 {
    0.05
}
fn default_scope() -> ViScope {
    ViScope::All
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    /// γ in ζ = γn/(2π ln n).
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Monte Carlo parameter draws (K) for the Fisher average.
    #[serde(default = "default_k")]
    pub draws: usize,
    /// Bound confidence level 1−δ.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Half-width of the classical parameter box for capacity draws.
    #[serde(default = "default_bound_box")]
    pub classical_bound: f64,
    /// Draw classical coordinates too, or pin them at the init point.
    #[serde(default = "default_true")]
    pub include_classical: bool,
    /// Channel probabilities visited by `noise-sweep`.
    #[serde(default = "default_grid")]
    pub sweep_grid: Vec<f64>,
}

fn default_gamma() -> f64 {
    1.0
}
fn default_k() -> usize {
    100
}
fn default_delta() -> f64 {
    0.05
}
fn default_bound_box() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_grid() -> Vec<f64> {
    vec![0.0, 0.02, 0.05, 0.1]
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            gamma: default_gamma(),
            draws: default_k(),
            delta: default_delta(),
            classical_bound: default_bound_box(),
            include_classical: true,
            sweep_grid: default_grid(),
        }
    }
}

/// Stage seeds derived from the base: consecutive offsets, one per stream.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeedLadder {
    pub base: u64,
    pub scenario: u64,
    pub split: u64,
    pub trainer: u64,
    pub metrics: u64,
    pub predict: u64,
}

impl SeedLadder {
    pub fn new(base: u64, scenario_override: u64) -> Self {
        SeedLadder {
            base,
            scenario: if scenario_override != 0 {
                scenario_override
            } else {
                base
            },
            split: base.wrapping_add(1),
            trainer: base.wrapping_add(2),
            metrics: base.wrapping_add(3),
            predict: base.wrapping_add(4),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Applies CLI overrides and derives the seed ladder.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>) -> (Self, SeedLadder) {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out_dir = o;
        }
        let ladder = SeedLadder::new(self.seed, self.scenario.seed);
        (self, ladder)
    }

    /// Range-checks every field, collecting one `path: problem` line each.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad: Vec<String> = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                bad.push(msg);
            }
        };

        check(
            self.case_path.is_file(),
            format!("case_path: file not found: {}", self.case_path.display()),
        );
        check(
            !self.out_dir.as_os_str().is_empty(),
            "out_dir: must not be empty".into(),
        );

        let s = &self.scenario;
        check(
            s.penetration.is_finite() && (0.0..=1.0).contains(&s.penetration),
            format!("scenario.penetration: must lie in [0, 1], got {}", s.penetration),
        );
        check(s.count >= 1, "scenario.count: must be at least 1".into());
        let (lo, hi) = s.load_scale_range;
        check(
            lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi,
            format!("scenario.load_scale_range: need 0 < lo <= hi, got ({lo}, {hi})"),
        );
        check(
            s.pv_beta.0 > 0.0 && s.pv_beta.1 > 0.0,
            format!(
                "scenario.pv_beta: shape parameters must be positive, got ({}, {})",
                s.pv_beta.0, s.pv_beta.1
            ),
        );
        check(
            s.wind_weibull.0 > 0.0 && s.wind_weibull.1 > 0.0,
            format!(
                "scenario.wind_weibull: shape and scale must be positive, got ({}, {})",
                s.wind_weibull.0, s.wind_weibull.1
            ),
        );

        let f = self.split.train_fraction;
        check(
            f.is_finite() && 0.0 < f && f < 1.0,
            format!("split.train_fraction: must lie strictly in (0, 1), got {f}"),
        );

        if let Some(m) = &self.model {
            match m.kind {
                ModelKind::Hybrid => {
                    check(
                        (1..=MAX_QUBITS).contains(&m.m),
                        format!("model.m: must lie in 1..={MAX_QUBITS}, got {}", m.m),
                    );
                    check(m.layers >= 1, "model.layers: must be at least 1".into());
                }
                ModelKind::Mlp => {
                    check(
                        !m.widths.is_empty() && m.widths.iter().all(|&w| w >= 1),
                        format!("model.widths: need nonempty positive widths, got {:?}", m.widths),
                    );
                }
            }
        }

        if let Some(t) = &self.trainer {
            check(t.epochs >= 1, "trainer.epochs: must be at least 1".into());
            check(
                t.lr.is_finite() && t.lr >= 0.0,
                format!("trainer.lr: must be finite and nonnegative, got {}", t.lr),
            );
            if let Some(b) = t.batch_size {
                check(b >= 1, "trainer.batch_size: must be at least 1".into());
            }
            check(
                t.mc_samples >= 1,
                "trainer.mc_samples: must be at least 1".into(),
            );
            check(
                t.predict_draws >= 1,
                "trainer.predict_draws: must be at least 1".into(),
            );
            check(
                t.sigma_obs.is_finite() && t.sigma_obs > 0.0,
                format!("trainer.sigma_obs: must be positive, got {}", t.sigma_obs),
            );
            check(
                t.init_sigma.is_finite() && t.init_sigma > 0.0,
                format!("trainer.init_sigma: must be positive, got {}", t.init_sigma),
            );
            for (name, w) in [
                ("vphi", t.weights.vphi),
                ("p", t.weights.p),
                ("q", t.weights.q),
            ] {
                check(
                    w.is_finite() && w >= 0.0,
                    format!("trainer.weights.{name}: must be finite and nonnegative, got {w}"),
                );
            }
        }

        if let Some(n) = &self.noise {
            for (name, p) in [
                ("bit_flip", n.bit_flip),
                ("phase_flip", n.phase_flip),
                ("depolarizing", n.depolarizing),
            ] {
                check(
                    p.is_finite() && (0.0..=1.0).contains(&p),
                    format!("noise.{name}: probability must lie in [0, 1], got {p}"),
                );
            }
        }

        let mc = &self.metrics;
        check(
            mc.gamma.is_finite() && 0.0 < mc.gamma && mc.gamma <= 1.0,
            format!("metrics.gamma: must lie in (0, 1], got {}", mc.gamma),
        );
        check(mc.draws >= 1, "metrics.draws: must be at least 1".into());
        check(
            mc.delta.is_finite() && 0.0 < mc.delta && mc.delta <= 1.0,
            format!("metrics.delta: must lie in (0, 1], got {}", mc.delta),
        );
        check(
            mc.classical_bound.is_finite() && mc.classical_bound > 0.0,
            format!(
                "metrics.classical_bound: must be positive, got {}",
                mc.classical_bound
            ),
        );
        check(
            !mc.sweep_grid.is_empty()
                && mc
                    .sweep_grid
                    .iter()
                    .all(|p| p.is_finite() && (0.0..=1.0).contains(p)),
            format!(
                "metrics.sweep_grid: need nonempty probabilities in [0, 1], got {:?}",
                mc.sweep_grid
            ),
        );

        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(format!(
                "invalid config:\n  {}",
                bad.join("\n  ")
            )))
        }
    }

    pub fn model_section(&self) -> Result<&ModelSection, CliError> {
        self.model
            .as_ref()
            .ok_or_else(|| CliError::validation("model: section is required for this command"))
    }

    pub fn trainer_section(&self) -> Result<&TrainerSection, CliError> {
        self.trainer
            .as_ref()
            .ok_or_else(|| CliError::validation("trainer: section is required for this command"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "case_path": "CASE",
            "out_dir": "runs/x",
            "scenario": { "penetration": 0.5, "count": 10 }
        }"#
        .to_string()
    }

    fn write_cfg(dir: &Path, body: &str) -> PathBuf {
        let case = dir.join("case.json");
        std::fs::write(
            &case,
            std::fs::read_to_string(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/../../cases/ieee6.json"
            ))
            .unwrap(),
        )
        .unwrap();
        let p = dir.join("cfg.json");
        std::fs::write(&p, body.replace("CASE", case.to_str().unwrap())).unwrap();
        p
    }

    #[test]
    fn minimal_config_passes_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_cfg(dir.path(), &minimal_json());
        let cfg = ExperimentConfig::load(&p).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.split.train_fraction, 0.6);
        assert_eq!(cfg.metrics.draws, 100);
        assert!(cfg.model.is_none());
    }

    #[test]
    fn bad_fields_report_their_paths() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{
            "case_path": "CASE",
            "out_dir": "runs/x",
            "scenario": { "penetration": 1.5, "count": 0 },
            "split": { "train_fraction": 1.0 },
            "trainer": { "algorithm": "variational", "epochs": 0, "lr": -1.0 },
            "noise": { "depolarizing": 2.0 },
            "metrics": { "gamma": 0.0 }
        }"#;
        let p = write_cfg(dir.path(), body);
        let cfg = ExperimentConfig::load(&p).unwrap();
        let err = cfg.validate().unwrap_err();
        let msg = err.to_string();
        for needle in [
            "scenario.penetration",
            "scenario.count",
            "split.train_fraction",
            "trainer.epochs",
            "trainer.lr",
            "noise.depolarizing",
            "metrics.gamma",
        ] {
            assert!(msg.contains(needle), "missing {needle} in: {msg}");
        }
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_fields_are_rejected_at_parse() {
        let dir = tempfile::tempdir().unwrap();
        let body = minimal_json().replace("\"out_dir\"", "\"typo_field\": 1, \"out_dir\"");
        let p = write_cfg(dir.path(), &body);
        let err = ExperimentConfig::load(&p).unwrap_err();
        assert!(err.to_string().contains("typo_field"));
    }

    #[test]
    fn seed_ladder_offsets_and_flag_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_cfg(dir.path(), &minimal_json());
        let cfg = ExperimentConfig::load(&p).unwrap();
        let (cfg, ladder) = cfg.resolve(Some(11), None);
        assert_eq!(cfg.seed, 11);
        assert_eq!(ladder.scenario, 11);
        assert_eq!(ladder.split, 12);
        assert_eq!(ladder.trainer, 13);
        assert_eq!(ladder.metrics, 14);
        assert_eq!(ladder.predict, 15);
    }

    #[test]
    fn nonzero_scenario_seed_pins_the_sampling_stream() {
        let dir = tempfile::tempdir().unwrap();
        let body = minimal_json().replace("\"count\": 10", "\"count\": 10, \"seed\": 99");
        let p = write_cfg(dir.path(), &body);
        let cfg = ExperimentConfig::load(&p).unwrap();
        let (_, ladder) = cfg.resolve(Some(11), None);
        assert_eq!(ladder.scenario, 99);
        assert_eq!(ladder.split, 12);
    }
}
