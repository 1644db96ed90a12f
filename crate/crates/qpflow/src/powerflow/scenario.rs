//! Renewable-uncertainty scenario sampling.
//!
//! Each sample perturbs the base case and solves it:
//!
//! 1. scale every load by one uniform draw from `load_scale_range`;
//! 2. draw each renewable unit's output fraction: units alternate kind by
//!    position among renewables, PV (even) ~ Beta(α, β) and wind (odd) via a
//!    cubic power curve `min(w³, 1)` of Weibull(shape, scale) speed;
//! 3. re-dispatch conventional units proportionally so scheduled generation
//!    covers the net load, the slack absorbing losses and residuals;
//! 4. solve; unconverged draws are discarded and redrawn.
//!
//! Renewable nameplates are rescaled once per run so that the expected
//! renewable output equals `penetration × total base load`: the scale is
//! `penetration · Σp_load / Σ cf_u · p_max_u` with `cf` the analytic
//! capacity factor of each unit's distribution.
//!
//! Determinism: sample `i`, attempt `a` draws from an RNG stream keyed as
//! `i·64 + a`, so reruns and thread counts never change the data.

use super::case::PowerCase;
use super::dataset::{Dataset, DatasetError, DatasetMeta, Sample};
use super::solve::{solve_nr, SolveOptions};
use super::ybus::build_ybus;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Uniform, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Expected renewable share of total base load, in [0, 1].
    pub penetration: f64,
    /// Uniform load multiplier range (lo, hi).
    #[serde(default = "default_load_scale")]
    pub load_scale_range: (f64, f64),
    /// Beta(α, β) for PV output fraction.
    #[serde(default = "default_pv_beta")]
    pub pv_beta: (f64, f64),
    /// Weibull (shape, scale) for wind speed, rated-speed units.
    #[serde(default = "default_wind_weibull")]
    pub wind_weibull: (f64, f64),
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_load_scale() -> (f64, f64) {
    (0.9, 1.1)
}

fn default_pv_beta() -> (f64, f64) {
    (2.06, 2.5)
}

fn default_wind_weibull() -> (f64, f64) {
    (2.0, 0.4)
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            penetration: 0.0,
            load_scale_range: default_load_scale(),
            pv_beta: default_pv_beta(),
            wind_weibull: default_wind_weibull(),
            count: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario config: {0}")]
    BadConfig(String),
    #[error(
        "{redraws} redraws over {count} samples exceeds the 20% budget; \
         last solver failure: {last_failure}"
    )]
    TooManyRedraws {
        redraws: usize,
        count: usize,
        last_failure: String,
    },
    #[error("sample {index} failed all {attempts} attempts; last solver failure: {last_failure}")]
    SampleExhausted {
        index: usize,
        attempts: usize,
        last_failure: String,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Generation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioStats {
    /// Discarded unconverged draws across the whole run.
    pub redraws: usize,
    /// Mean over samples of total renewable output / total scaled load;
    /// converges to `penetration` by construction.
    pub mean_renewable_share: f64,
}

/// Expected output fraction of a Beta(α, β) PV unit.
pub fn capacity_factor_pv(alpha: f64, beta: f64) -> f64 {
    alpha / (alpha + beta)
}

/// Expected output fraction of a wind unit: E[min(W³, 1)] for
/// W ~ Weibull(shape k, scale λ), by Simpson quadrature of
/// ∫₀¹ w³ f(w) dw plus the saturated tail e^(−(1/λ)^k).
pub fn capacity_factor_wind(shape: f64, scale: f64) -> f64 {
    let g = |w: f64| -> f64 {
        if w == 0.0 {
            0.0
        } else {
            (shape / scale.powf(shape)) * w.powf(shape + 2.0) * (-(w / scale).powf(shape)).exp()
        }
    };
    let n = 2000;
    let h = 1.0 / n as f64;
    let mut sum = g(0.0) + g(1.0);
    for i in 1..n {
        let w = i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * g(w);
    }
    let integral = sum * h / 3.0;
    integral + (-(1.0 / scale).powf(shape)).exp()
}

/// Factor applied to every renewable nameplate so expected output matches
/// the configured penetration. Zero when the case has no renewable capacity
/// or penetration is zero.
pub fn nameplate_scale(case: &PowerCase, cfg: &ScenarioConfig) -> f64 {
    let total_load = case.total_p_load();
    let mut expected = 0.0;
    let mut ordinal = 0usize;
    for g in case.gens.iter().filter(|g| g.is_renewable) {
        let cf = if ordinal % 2 == 0 {
            capacity_factor_pv(cfg.pv_beta.0, cfg.pv_beta.1)
        } else {
            capacity_factor_wind(cfg.wind_weibull.0, cfg.wind_weibull.1)
        };
        expected += cf * g.p_max;
        ordinal += 1;
    }
    if cfg.penetration <= 0.0 || expected <= 0.0 {
        0.0
    } else {
        cfg.penetration * total_load / expected
    }
}

fn validate(cfg: &ScenarioConfig) -> Result<(), ScenarioError> {
    let bad = |what: String| Err(ScenarioError::BadConfig(what));
    if !(0.0..=1.0).contains(&cfg.penetration) {
        return bad(format!("penetration {} outside [0, 1]", cfg.penetration));
    }
    let (lo, hi) = cfg.load_scale_range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
        return bad(format!("load_scale_range ({lo}, {hi}) needs 0 < lo <= hi"));
    }
    for (name, (a, b)) in [("pv_beta", cfg.pv_beta), ("wind_weibull", cfg.wind_weibull)] {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return bad(format!("{name} ({a}, {b}) needs positive finite parameters"));
        }
    }
    if cfg.count == 0 {
        return bad("count must be at least 1".into());
    }
    Ok(())
}

/// One scenario's random draws, separated from solving for testability.
struct Draw {
    load_scale: f64,
    /// Output fraction per renewable unit, in listing order.
    fractions: Vec<f64>,
}

/// Streams per sample index; attempts beyond this would collide with the
/// next sample's streams.
const STREAMS_PER_SAMPLE: u64 = 64;
const MAX_ATTEMPTS: usize = 50;

fn draw_scenario(cfg: &ScenarioConfig, n_renewable: usize, index: u64, attempt: u64) -> Draw {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index * STREAMS_PER_SAMPLE + attempt);
    let (lo, hi) = cfg.load_scale_range;
    let load_scale = Uniform::new_inclusive(lo, hi).sample(&mut rng);
    let pv = Beta::new(cfg.pv_beta.0, cfg.pv_beta.1).expect("validated");
    let wind = Weibull::new(cfg.wind_weibull.1, cfg.wind_weibull.0).expect("validated");
    let fractions = (0..n_renewable)
        .map(|ordinal| {
            if ordinal % 2 == 0 {
                pv.sample(&mut rng)
            } else {
                let w: f64 = wind.sample(&mut rng);
                (w * w * w).min(1.0)
            }
        })
        .collect();
    Draw {
        load_scale,
        fractions,
    }
}

/// Applies a draw to a copy of the base case and reports
/// (total renewable output, total scaled load).
fn apply_draw(base: &PowerCase, draw: &Draw, plate_scale: f64) -> (PowerCase, f64, f64) {
    let mut case = base.clone();
    let mut total_load = 0.0;
    for bus in &mut case.buses {
        bus.p_load *= draw.load_scale;
        bus.q_load *= draw.load_scale;
        total_load += bus.p_load;
    }
    let mut ren_total = 0.0;
    let mut conv_base = 0.0;
    let mut ordinal = 0usize;
    for g in &mut case.gens {
        if g.is_renewable {
            g.p_gen = draw.fractions[ordinal] * plate_scale * g.p_max;
            g.q_gen = 0.0;
            ren_total += g.p_gen;
            ordinal += 1;
        } else {
            conv_base += g.p_gen;
        }
    }
    // Proportional re-dispatch; negative residuals park conventionals at
    // zero and leave the slack to absorb the surplus.
    let factor = if conv_base > 0.0 {
        ((total_load - ren_total) / conv_base).max(0.0)
    } else {
        0.0
    };
    for g in case.gens.iter_mut().filter(|g| !g.is_renewable) {
        g.p_gen *= factor;
    }
    (case, ren_total, total_load)
}

/// Samples `cfg.count` converged scenarios into a dataset.
pub fn sample_scenarios(case: &PowerCase, cfg: &ScenarioConfig) -> Result<Dataset, ScenarioError> {
    sample_scenarios_with_stats(case, cfg).map(|(ds, _)| ds)
}

/// As [`sample_scenarios`], also returning generation diagnostics.
pub fn sample_scenarios_with_stats(
    case: &PowerCase,
    cfg: &ScenarioConfig,
) -> Result<(Dataset, ScenarioStats), ScenarioError> {
    validate(cfg)?;
    let ybus = build_ybus(case);
    let opts = SolveOptions::default();
    let plate_scale = nameplate_scale(case, cfg);
    let n_renewable = case.gens.iter().filter(|g| g.is_renewable).count();

    struct PerSample {
        sample: Sample,
        redraws: usize,
        share: f64,
    }

    let results: Result<Vec<PerSample>, ScenarioError> = (0..cfg.count)
        .into_par_iter()
        .map(|index| {
            let mut last_failure = String::new();
            for attempt in 0..MAX_ATTEMPTS {
                let draw = draw_scenario(cfg, n_renewable, index as u64, attempt as u64);
                let (scenario_case, ren_total, total_load) =
                    apply_draw(case, &draw, plate_scale);
                match solve_nr(&scenario_case, &ybus, &opts) {
                    Ok(sol) => {
                        let mut input = sol.p_inj;
                        input.extend(sol.q_inj);
                        let mut target = sol.v;
                        target.extend(sol.phi);
                        target.extend(sol.flows.iter().map(|f| f.p_from));
                        target.extend(sol.flows.iter().map(|f| f.q_from));
                        return Ok(PerSample {
                            sample: Sample { input, target },
                            redraws: attempt,
                            share: if total_load > 0.0 {
                                ren_total / total_load
                            } else {
                                0.0
                            },
                        });
                    }
                    Err(e) => last_failure = e.to_string(),
                }
            }
            Err(ScenarioError::SampleExhausted {
                index,
                attempts: MAX_ATTEMPTS,
                last_failure,
            })
        })
        .collect();
    let results = results?;

    let redraws: usize = results.iter().map(|r| r.redraws).sum();
    if redraws * 5 > cfg.count {
        let last_failure = "rate budget exceeded".to_string();
        return Err(ScenarioError::TooManyRedraws {
            redraws,
            count: cfg.count,
            last_failure,
        });
    }
    let mean_renewable_share =
        results.iter().map(|r| r.share).sum::<f64>() / cfg.count as f64;
    let samples = results.into_iter().map(|r| r.sample).collect();
    let meta = DatasetMeta {
        n_bus: case.n_bus(),
        n_branch: case.n_branch(),
        scenario: Some(cfg.clone()),
        redraws,
    };
    let ds = Dataset::from_raw(samples, meta)?;
    Ok((
        ds,
        ScenarioStats {
            redraws,
            mean_renewable_share,
        },
    ))
}
