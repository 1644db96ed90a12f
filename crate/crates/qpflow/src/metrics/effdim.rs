//! Monte Carlo effective dimension over the parameter box.
//!
//! With `ζ = γn / (2π ln n)` and trace-normalized Fisher draws `F̃(θ_k)`,
//!
//! ```text
//! d_eff = 2 · ln( (1/K) Σ_k √det(I_d + ζ F̃(θ_k)) ) / ln ζ
//! ```
//!
//! The normalization constant is one shared scalar c with
//! `(1/K) Σ_k tr(c·F(θ_k)) = d`, which cancels any uniform scaling of the
//! raw Fisher draws (so the likelihood scale used to compute them cannot
//! matter). Determinants go through the eigenvalues of the symmetrized
//! matrix, with each `1 + ζλ` factor floored at 1e-12, and the K-average
//! through log-sum-exp, since √det overflows already at modest d.

use super::fisher::empirical_fisher;
use super::MetricsError;
use crate::model::{FlatParams, Model, NormPair};
use nalgebra::DMatrix;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffDimConfig {
    /// γ ∈ (0, 1] in ζ = γn/(2π ln n).
    pub gamma: f64,
    /// Effective sample count n entering ζ.
    pub n: usize,
    /// Number of Monte Carlo parameter draws K.
    pub draws: usize,
    /// Half-width B of the classical coordinate box [−B, B]; circuit angles
    /// always draw from [−π, π].
    pub classical_bound: f64,
    /// When false, classical coordinates stay pinned at the seeded point
    /// initialization and only the circuit angles vary.
    pub include_classical: bool,
    pub seed: u64,
}

impl Default for EffDimConfig {
    fn default() -> Self {
        EffDimConfig {
            gamma: 1.0,
            n: 1000,
            draws: 100,
            classical_bound: 1.0,
            include_classical: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffDimResult {
    pub d_eff_raw: f64,
    /// `d_eff_raw / d`, the fraction of parameter directions in use.
    pub d_eff_normalized: f64,
    /// The shared Fisher scaling c that set the average trace to d.
    pub trace_norm_factor: f64,
    pub config: EffDimConfig,
}

/// `ζ = γn / (2π ln n)`.
pub fn zeta(gamma: f64, n: usize) -> f64 {
    gamma * n as f64 / (2.0 * PI * (n as f64).ln())
}

fn validate(cfg: &EffDimConfig) -> Result<f64, MetricsError> {
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(MetricsError::BadConfig(format!(
            "gamma must lie in (0, 1], got {}",
            cfg.gamma
        )));
    }
    if (cfg.n as f64).ln() <= 1.0 {
        return Err(MetricsError::BadConfig(format!(
            "sample count n must satisfy ln n > 1, got {}",
            cfg.n
        )));
    }
    if cfg.draws == 0 {
        return Err(MetricsError::BadConfig("draws must be at least 1".into()));
    }
    if !(cfg.classical_bound > 0.0) {
        return Err(MetricsError::BadConfig(format!(
            "classical_bound must be positive, got {}",
            cfg.classical_bound
        )));
    }
    let z = zeta(cfg.gamma, cfg.n);
    if z <= 1.0 {
        return Err(MetricsError::ZetaNotAboveOne { zeta: z });
    }
    Ok(z)
}

/// Uniform parameter draws over the box, deterministic in the seed.
pub(crate) fn draw_param_sets(model: &Model, cfg: &EffDimConfig) -> Vec<FlatParams> {
    let d = model.layout.len();
    let quantum = model.layout.range("quantum").ok().unwrap_or(0..0);
    let init = model.init_params(cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let angle = Uniform::new_inclusive(-PI, PI);
    let weight = Uniform::new_inclusive(-cfg.classical_bound, cfg.classical_bound);
    (0..cfg.draws)
        .map(|_| {
            let values = (0..d)
                .map(|i| {
                    if quantum.contains(&i) {
                        angle.sample(&mut rng)
                    } else if cfg.include_classical {
                        weight.sample(&mut rng)
                    } else {
                        init.values[i]
                    }
                })
                .collect();
            FlatParams { values }
        })
        .collect()
}

/// Effective dimension of a model over observed data.
///
/// Fisher draws use unit likelihood scale; trace normalization makes the
/// result independent of that choice.
pub fn effective_dimension(
    model: &Model,
    data: &[NormPair],
    cfg: &EffDimConfig,
) -> Result<EffDimResult, MetricsError> {
    validate(cfg)?;
    if data.is_empty() {
        return Err(MetricsError::EmptyData);
    }
    let points = draw_param_sets(model, cfg);
    let fishers: Result<Vec<Vec<Vec<f64>>>, MetricsError> = points
        .par_iter()
        .map(|p| Ok(empirical_fisher(model, p, data, 1.0)?.matrix))
        .collect();
    effective_dimension_from_draws(&fishers?, cfg)
}

/// The estimator itself, applied to externally supplied Fisher draws.
pub fn effective_dimension_from_draws(
    fishers: &[Vec<Vec<f64>>],
    cfg: &EffDimConfig,
) -> Result<EffDimResult, MetricsError> {
    let z = validate(cfg)?;
    if fishers.is_empty() {
        return Err(MetricsError::EmptyData);
    }
    let d = fishers[0].len();
    for f in fishers {
        if f.len() != d || f.iter().any(|row| row.len() != d) {
            return Err(MetricsError::BadConfig(
                "Fisher draws must be square matrices of one shared dimension".into(),
            ));
        }
    }

    let trace_sum: f64 = fishers
        .iter()
        .map(|f| (0..d).map(|i| f[i][i]).sum::<f64>())
        .sum();
    let c = if trace_sum > 0.0 {
        (fishers.len() * d) as f64 / trace_sum
    } else {
        1.0
    };

    // Per draw: ln √det(I + ζcF) = ½ Σ_j ln(1 + ζcλ_j), then a log-sum-exp
    // average across draws.
    let half_log_dets: Vec<f64> = fishers
        .iter()
        .map(|f| {
            let m = DMatrix::from_fn(d, d, |i, j| 0.5 * c * (f[i][j] + f[j][i]));
            m.symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|&l| 0.5 * (1.0 + z * l).max(1e-12).ln())
                .sum()
        })
        .collect();
    let peak = half_log_dets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ln_mean = peak + (half_log_dets.iter().map(|v| (v - peak).exp()).sum::<f64>()).ln()
        - (fishers.len() as f64).ln();
    let d_eff_raw = (2.0 * ln_mean / z.ln()).max(0.0);
    Ok(EffDimResult {
        d_eff_raw,
        d_eff_normalized: d_eff_raw / d as f64,
        trace_norm_factor: c,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkit::{two_bus_model, two_bus_samples};
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn identity_draws(d: usize, k: usize) -> Vec<Vec<Vec<f64>>> {
        let mut eye = vec![vec![0.0; d]; d];
        for (i, row) in eye.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        vec![eye; k]
    }

    fn random_psd(d: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let b: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| b[k][i] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn zero_fisher_draws_give_zero_dimension() {
        let draws = vec![vec![vec![0.0; 3]; 3]; 5];
        let r = effective_dimension_from_draws(&draws, &EffDimConfig::default()).unwrap();
        assert_eq!(r.d_eff_raw, 0.0);
        assert_eq!(r.d_eff_normalized, 0.0);
        assert_eq!(r.trace_norm_factor, 1.0);
    }

    #[test]
    fn identity_fisher_matches_the_closed_form() {
        let cfg = EffDimConfig::default();
        let z = zeta(1.0, 1000);
        assert_abs_diff_eq!(z, 23.040_037_85, epsilon = 1e-6);
        let r = effective_dimension_from_draws(&identity_draws(12, 7), &cfg).unwrap();
        let expected = (1.0 + z).ln() / z.ln();
        assert_abs_diff_eq!(r.d_eff_normalized, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(r.d_eff_raw, 12.0 * expected, epsilon = 1e-8);
        assert_abs_diff_eq!(r.d_eff_normalized, 1.0135, epsilon = 1e-3);
        assert_abs_diff_eq!(r.trace_norm_factor, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_scaling_of_all_draws_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws: Vec<Vec<Vec<f64>>> = (0..6).map(|_| random_psd(4, &mut rng)).collect();
        let scaled: Vec<Vec<Vec<f64>>> = draws
            .iter()
            .map(|f| f.iter().map(|row| row.iter().map(|v| 37.5 * v).collect()).collect())
            .collect();
        let cfg = EffDimConfig::default();
        let a = effective_dimension_from_draws(&draws, &cfg).unwrap();
        let b = effective_dimension_from_draws(&scaled, &cfg).unwrap();
        assert_abs_diff_eq!(a.d_eff_raw, b.d_eff_raw, epsilon = 1e-9);
        assert_abs_diff_eq!(
            a.trace_norm_factor,
            37.5 * b.trace_norm_factor,
            epsilon = 1e-9 * a.trace_norm_factor
        );
    }

    #[test]
    fn eigenvalue_log_det_agrees_with_direct_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = random_psd(5, &mut rng);
            let z = 2.0;
            let shifted = DMatrix::from_fn(5, 5, |i, j| {
                0.5 * (f[i][j] + f[j][i]) * z + if i == j { 1.0 } else { 0.0 }
            });
            let direct = shifted.clone().determinant();
            let via_eig: f64 = shifted
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|&l| l.max(1e-12).ln())
                .sum();
            assert!(
                (via_eig.exp() - direct).abs() <= 1e-8 * direct.abs().max(1.0),
                "{} vs {direct}",
                via_eig.exp()
            );
        }
    }

    #[test]
    fn model_effective_dimension_is_seeded_and_in_range() {
        let model = two_bus_model();
        let data = model.normalize_batch(&two_bus_samples());
        let cfg = EffDimConfig {
            draws: 12,
            seed: 5,
            ..EffDimConfig::default()
        };
        let a = effective_dimension(&model, &data, &cfg).unwrap();
        let b = effective_dimension(&model, &data, &cfg).unwrap();
        assert_eq!(a, b);
        let d = model.layout.len() as f64;
        assert!(a.d_eff_raw > 0.0 && a.d_eff_raw <= d, "raw {}", a.d_eff_raw);
        assert!(a.d_eff_normalized > 0.0 && a.d_eff_normalized <= 1.1);
    }

    #[test]
    fn excluding_classical_coordinates_pins_them_at_the_init() {
        let model = two_bus_model();
        let cfg = EffDimConfig {
            draws: 3,
            seed: 8,
            include_classical: false,
            ..EffDimConfig::default()
        };
        let init = model.init_params(8);
        let q = model.layout.range("quantum").unwrap();
        for draw in draw_param_sets(&model, &cfg) {
            for i in 0..init.len() {
                if q.contains(&i) {
                    assert!(draw.values[i].abs() <= PI);
                } else {
                    assert_eq!(draw.values[i], init.values[i]);
                }
            }
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let draws = identity_draws(2, 1);
        let bad_gamma = EffDimConfig {
            gamma: 0.0,
            ..EffDimConfig::default()
        };
        assert!(matches!(
            effective_dimension_from_draws(&draws, &bad_gamma),
            Err(MetricsError::BadConfig(_))
        ));
        let tiny_n = EffDimConfig {
            n: 2,
            ..EffDimConfig::default()
        };
        assert!(matches!(
            effective_dimension_from_draws(&draws, &tiny_n),
            Err(MetricsError::BadConfig(_))
        ));
        // ln 3 > 1 but zeta = 3/(2π ln 3) < 1.
        let small_zeta = EffDimConfig {
            n: 3,
            ..EffDimConfig::default()
        };
        assert!(matches!(
            effective_dimension_from_draws(&draws, &small_zeta),
            Err(MetricsError::ZetaNotAboveOne { .. })
        ));
        let ragged = vec![vec![vec![0.0; 2]; 2], vec![vec![0.0; 3]; 3]];
        assert!(matches!(
            effective_dimension_from_draws(&ragged, &EffDimConfig::default()),
            Err(MetricsError::BadConfig(_))
        ));
    }
}
