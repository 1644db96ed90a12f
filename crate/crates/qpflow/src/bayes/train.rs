//! Stochastic variational inference by gradient ascent on the ELBO.
//!
//! Each epoch draws `mc_samples` fresh ε vectors, forms the reparameterized
//! estimate and its gradient, and steps `(μ, ρ) ← (μ, ρ) + lr·∇ELBO`. The
//! log row records the estimate that produced that epoch's step. With
//! [`ViScope::QuantumOnly`] every parameter outside the circuit's named
//! range is treated as a point mass: frozen at μ, excluded from the KL, and
//! never updated.

use super::elbo::{elbo_masked, ElboParts};
use super::posterior::{PriorSpec, VariationalPosterior};
use super::BayesError;
use crate::model::{Differentiable, Model, ModelError, NormPair};
use crate::powerflow::Sample;
use crate::quantum::NoiseSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which parameter block the posterior actually covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViScope {
    /// Every parameter is variational.
    All,
    /// Only the circuit rotation angles; classical weights stay at μ.
    QuantumOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViConfig {
    pub epochs: usize,
    pub lr: f64,
    /// ELBO draws per epoch (M).
    pub mc_samples: usize,
    pub seed: u64,
    pub scope: ViScope,
    /// Observation noise scale of the Gaussian likelihood.
    pub sigma_obs: f64,
    /// Initial posterior width around the seeded point initialization.
    pub init_sigma: f64,
    pub prior: PriorSpec,
    pub noise: Option<NoiseSpec>,
}

impl Default for ViConfig {
    fn default() -> Self {
        ViConfig {
            epochs: 100,
            lr: 0.01,
            mc_samples: super::DEFAULT_MC_SAMPLES,
            seed: 0,
            scope: ViScope::All,
            sigma_obs: super::DEFAULT_SIGMA_OBS,
            init_sigma: super::DEFAULT_INIT_SIGMA,
            prior: PriorSpec::default(),
            noise: None,
        }
    }
}

/// ELBO pieces for the estimate used at this epoch's step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViRow {
    pub epoch: usize,
    pub elbo: f64,
    pub kl: f64,
    pub log_lik: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ViLog {
    pub rows: Vec<ViRow>,
}

fn scope_mask(model: &Model, scope: ViScope) -> Result<Option<Vec<bool>>, BayesError> {
    match scope {
        ViScope::All => Ok(None),
        ViScope::QuantumOnly => {
            let range = model
                .layout
                .range("quantum")
                .map_err(|_| BayesError::NoQuantumRange)?;
            let mut mask = vec![false; model.layout.len()];
            mask[range].fill(true);
            Ok(Some(mask))
        }
    }
}

/// Fits the variational posterior for a power-flow model.
///
/// μ starts at the model's seeded point initialization and ρ at a uniform
/// `softplus⁻¹(init_sigma)`; ε draws come from an independent stream of the
/// same seed so point training and VI disagree only where they should.
pub fn train_vi(
    model: &Model,
    data: &[Sample],
    cfg: &ViConfig,
    on_epoch: impl FnMut(&ViRow, &VariationalPosterior),
) -> Result<(VariationalPosterior, ViLog), BayesError> {
    let mask = scope_mask(model, cfg.scope)?;
    let batch = model.normalize_batch(data);
    let init = model.init_params(cfg.seed);
    let post = VariationalPosterior::from_init(init, cfg.init_sigma);
    train_vi_core(model, &batch, post, mask.as_deref(), cfg, on_epoch)
}

/// As [`train_vi`], but resumes from an existing posterior.
///
/// The caller owns the epoch bookkeeping: rows restart at 1 and the ε stream
/// restarts from `cfg.seed`, so a resumed trajectory is continuous but not
/// bitwise identical to an uninterrupted run.
pub fn train_vi_from(
    model: &Model,
    data: &[Sample],
    post: VariationalPosterior,
    cfg: &ViConfig,
    on_epoch: impl FnMut(&ViRow, &VariationalPosterior),
) -> Result<(VariationalPosterior, ViLog), BayesError> {
    if post.len() != model.layout.len() {
        return Err(BayesError::DimMismatch {
            got: post.len(),
            expected: model.layout.len(),
        });
    }
    let mask = scope_mask(model, cfg.scope)?;
    let batch = model.normalize_batch(data);
    train_vi_core(model, &batch, post, mask.as_deref(), cfg, on_epoch)
}

/// Scope-resolved core, shared with tests that use bare differentiable toys.
pub(crate) fn train_vi_core<M: Differentiable + Sync>(
    model: &M,
    batch: &[NormPair],
    mut post: VariationalPosterior,
    mask: Option<&[bool]>,
    cfg: &ViConfig,
    mut on_epoch: impl FnMut(&ViRow, &VariationalPosterior),
) -> Result<(VariationalPosterior, ViLog), BayesError> {
    if !(cfg.lr >= 0.0) {
        return Err(BayesError::BadLearningRate { lr: cfg.lr });
    }
    if cfg.mc_samples == 0 {
        return Err(BayesError::BadSampleCount);
    }
    if batch.is_empty() {
        return Err(BayesError::Model(ModelError::BadShape(
            "training set is empty".into(),
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut log = ViLog::default();
    for epoch in 1..=cfg.epochs {
        let eps: Vec<Vec<f64>> = (0..cfg.mc_samples).map(|_| post.draw_eps(&mut rng)).collect();
        let step = elbo_masked(
            &post,
            model,
            batch,
            &eps,
            &cfg.prior,
            cfg.sigma_obs,
            cfg.noise.as_ref(),
            mask,
        );
        let (parts, grad): (ElboParts, _) = match step {
            Ok(v) => v,
            Err(BayesError::NonFinite) => return Err(BayesError::Diverged { epoch }),
            Err(e) => return Err(e),
        };
        for i in 0..post.len() {
            post.mu[i] += cfg.lr * grad.mu[i];
            post.rho[i] += cfg.lr * grad.rho[i];
        }
        if post.mu.iter().chain(&post.rho).any(|v| !v.is_finite()) {
            return Err(BayesError::Diverged { epoch });
        }
        let row = ViRow {
            epoch,
            elbo: parts.elbo,
            kl: parts.kl,
            log_lik: parts.log_lik,
        };
        on_epoch(&row, &post);
        log.rows.push(row);
    }
    Ok((post, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::posterior::softplus_inv;
    use crate::model::FlatParams;
    use crate::powerflow::{Branch, Bus, BusKind, Generator, Norms, PowerCase};
    use approx::assert_abs_diff_eq;

    /// f(x) = θ, one output, ignores the input.
    struct ScalarModel;

    impl Differentiable for ScalarModel {
        fn param_count(&self) -> usize {
            1
        }
        fn output_dim(&self) -> usize {
            1
        }
        fn output(
            &self,
            p: &FlatParams,
            _x: &[f64],
            _n: Option<&NoiseSpec>,
        ) -> Result<Vec<f64>, ModelError> {
            Ok(vec![p.values[0]])
        }
        fn vjp(
            &self,
            _p: &FlatParams,
            _x: &[f64],
            _n: Option<&NoiseSpec>,
            c: &[f64],
        ) -> Result<Vec<f64>, ModelError> {
            Ok(vec![c[0]])
        }
    }

    fn two_bus_case() -> PowerCase {
        PowerCase {
            base_mva: 100.0,
            buses: vec![
                Bus {
                    id: 0,
                    kind: BusKind::Slack,
                    p_load: 0.0,
                    q_load: 0.0,
                    v_set: Some(1.02),
                    shunt_b: 0.0,
                },
                Bus {
                    id: 1,
                    kind: BusKind::Pq,
                    p_load: 0.4,
                    q_load: 0.15,
                    v_set: None,
                    shunt_b: 0.0,
                },
            ],
            branches: vec![Branch {
                from: 0,
                to: 1,
                r: 0.03,
                x: 0.1,
                b_charge: 0.0,
                tap: 1.0,
            }],
            gens: vec![Generator {
                bus: 0,
                p_gen: 0.4,
                q_gen: 0.0,
                is_renewable: false,
                p_max: 1.0,
            }],
        }
    }

    fn toy_setup() -> (Model, Vec<Sample>) {
        let case = two_bus_case();
        let samples: Vec<Sample> = [
            (1.021, 0.98, -0.033),
            (1.019, 1.00, -0.031),
            (1.022, 0.96, -0.036),
            (1.018, 1.01, -0.030),
        ]
        .iter()
        .map(|&(v0, v1, phi1)| Sample {
            input: vec![v0, v1, 0.0005, phi1],
            target: vec![v0, v1, 0.0005, phi1, 0.39, 0.17],
        })
        .collect();
        let norms = Norms::fit(&samples);
        let model = Model::new_hybrid(case, norms, 2, 1).unwrap();
        (model, samples)
    }

    #[test]
    fn gradient_ascent_recovers_the_conjugate_posterior() {
        // Gaussian prior N(0,1), four direct observations of θ with
        // σ_obs = 0.4: precision 1 + 4/0.16 = 26, so σ* = 26^{-1/2} and
        // μ* = (Σy/σ_obs²)/26.
        let batch: Vec<NormPair> = [0.5, 0.9, 0.2, 0.7]
            .iter()
            .map(|&y| (vec![], vec![y]))
            .collect();
        let cfg = ViConfig {
            epochs: 3000,
            lr: 0.005,
            mc_samples: 16,
            seed: 7,
            sigma_obs: 0.4,
            ..ViConfig::default()
        };
        let post = VariationalPosterior::from_init(FlatParams { values: vec![0.0] }, 0.3);
        let (fit, log) = train_vi_core(&ScalarModel, &batch, post, None, &cfg, |_, _| {}).unwrap();

        let mu_star = (2.3 / 0.16) / 26.0;
        let sigma_star = 1.0 / 26.0_f64.sqrt();
        assert!(
            (fit.mu[0] - mu_star).abs() < 0.05 * mu_star.abs().max(1.0),
            "mu {} vs {mu_star}",
            fit.mu[0]
        );
        let sigma = fit.sigma()[0];
        assert!(
            (sigma - sigma_star).abs() < 0.05 * sigma_star,
            "sigma {sigma} vs {sigma_star}"
        );
        // Ascent: the ELBO trend over training is upward.
        let early: f64 = log.rows[..50].iter().map(|r| r.elbo).sum::<f64>() / 50.0;
        let late: f64 = log.rows[log.rows.len() - 50..].iter().map(|r| r.elbo).sum::<f64>() / 50.0;
        assert!(late > early, "elbo did not improve: {early} -> {late}");
    }

    #[test]
    fn zero_learning_rate_leaves_the_posterior_at_init() {
        let (model, samples) = toy_setup();
        let cfg = ViConfig {
            epochs: 3,
            lr: 0.0,
            mc_samples: 2,
            seed: 4,
            ..ViConfig::default()
        };
        let (fit, log) = train_vi(&model, &samples, &cfg, |_, _| {}).unwrap();
        let init = VariationalPosterior::from_init(model.init_params(4), cfg.init_sigma);
        assert_eq!(fit, init);
        assert_eq!(log.rows.len(), 3);
    }

    #[test]
    fn same_seed_reproduces_the_run_bit_for_bit() {
        let (model, samples) = toy_setup();
        // A gentle lr and wide sigma_obs: the tight default likelihood scale
        // turns untrained flow residuals into huge gradients on this toy.
        let cfg = ViConfig {
            epochs: 5,
            lr: 1e-5,
            mc_samples: 2,
            seed: 9,
            sigma_obs: 0.5,
            ..ViConfig::default()
        };
        let mut seen = Vec::new();
        let (a, log_a) = train_vi(&model, &samples, &cfg, |r, _| seen.push(r.epoch)).unwrap();
        let (b, log_b) = train_vi(&model, &samples, &cfg, |_, _| {}).unwrap();
        assert_eq!(a, b);
        assert_eq!(seen, vec![1, 2, 3, 4, 5]);
        for (ra, rb) in log_a.rows.iter().zip(&log_b.rows) {
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn quantum_scope_freezes_the_classical_parameters() {
        let (model, samples) = toy_setup();
        let cfg = ViConfig {
            epochs: 4,
            lr: 1e-3,
            mc_samples: 2,
            seed: 2,
            scope: ViScope::QuantumOnly,
            ..ViConfig::default()
        };
        let (fit, log) = train_vi(&model, &samples, &cfg, |_, _| {}).unwrap();
        let init = model.init_params(2);
        let q = model.layout.range("quantum").unwrap();
        let rho0 = softplus_inv(cfg.init_sigma);
        let mut moved = false;
        for i in 0..fit.len() {
            if q.contains(&i) {
                moved |= fit.mu[i] != init.values[i] || fit.rho[i] != rho0;
            } else {
                assert_eq!(fit.mu[i], init.values[i], "classical mu {i} moved");
                assert_eq!(fit.rho[i], rho0, "classical rho {i} moved");
            }
        }
        assert!(moved, "no quantum parameter moved");
        // The masked KL at init covers only the 4 circuit angles; each is at
        // most ln(1/σ0) + (σ0² + π²)/2 − 1/2 ≈ 7.44, so 4 of them < 30.
        assert!(
            log.rows[0].kl > 0.0 && log.rows[0].kl < 4.0 * 7.44,
            "kl {}",
            log.rows[0].kl
        );
    }

    #[test]
    fn quantum_scope_rejects_a_purely_classical_net() {
        let case = two_bus_case();
        let samples: Vec<Sample> = vec![Sample {
            input: vec![1.0, 1.0, 0.0, 0.0],
            target: vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        }];
        let norms = Norms::fit(&samples);
        let model = Model::new_mlp(case, norms, &[5]).unwrap();
        let cfg = ViConfig {
            epochs: 1,
            scope: ViScope::QuantumOnly,
            ..ViConfig::default()
        };
        assert!(matches!(
            train_vi(&model, &samples, &cfg, |_, _| {}),
            Err(BayesError::NoQuantumRange)
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (model, samples) = toy_setup();
        let bad_lr = ViConfig {
            lr: -0.1,
            ..ViConfig::default()
        };
        assert!(matches!(
            train_vi(&model, &samples, &bad_lr, |_, _| {}),
            Err(BayesError::BadLearningRate { .. })
        ));
        let bad_m = ViConfig {
            mc_samples: 0,
            ..ViConfig::default()
        };
        assert!(matches!(
            train_vi(&model, &samples, &bad_m, |_, _| {}),
            Err(BayesError::BadSampleCount)
        ));
        assert!(matches!(
            train_vi(&model, &[], &ViConfig::default(), |_, _| {}),
            Err(BayesError::Model(_))
        ));
    }

    #[test]
    fn resume_continues_from_given_posterior() {
        let (model, samples) = toy_setup();
        let cfg = ViConfig {
            epochs: 3,
            lr: 1e-5,
            sigma_obs: 0.5,
            mc_samples: 2,
            seed: 5,
            ..ViConfig::default()
        };
        let (post, _) = train_vi(&model, &samples, &cfg, |_, _| {}).unwrap();
        let (resumed, log) =
            train_vi_from(&model, &samples, post.clone(), &cfg, |_, _| {}).unwrap();
        assert_eq!(log.rows.len(), 3);
        // Continued optimization must actually move the posterior.
        assert!(resumed.mu.iter().zip(&post.mu).any(|(a, b)| a != b));

        let short = VariationalPosterior::from_init(
            FlatParams {
                values: vec![0.0; 3],
            },
            0.05,
        );
        assert!(matches!(
            train_vi_from(&model, &samples, short, &cfg, |_, _| {}),
            Err(BayesError::DimMismatch { .. })
        ));
    }
}
