//! Composite squared-error training loss.
//!
//! Residuals split into three groups, each averaged over its own
//! components and then combined with configurable weights (all 1 by
//! default):
//!
//! ```text
//! L = w_v · mean((v̂,φ̂) − (v,φ))² + w_p · mean(p̂f − pf)² + w_q · mean(q̂f − qf)²
//! ```
//!
//! Everything is in normalized units; the model's output already contains
//! the renormalized flow block. Batch losses and gradients are means over
//! samples; per-sample terms are evaluated in parallel and reduced in a
//! fixed order so results are bit-reproducible.

use super::net::{Differentiable, Model};
use super::params::FlatParams;
use super::ModelError;
use crate::quantum::NoiseSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// An (input, target) pair in normalized units.
pub type NormPair = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub vphi: f64,
    pub p: f64,
    pub q: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            vphi: 1.0,
            p: 1.0,
            q: 1.0,
        }
    }
}

/// The three per-group means of squared residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub vphi: f64,
    pub p: f64,
    pub q: f64,
}

impl LossTerms {
    pub fn total(&self, w: &LossWeights) -> f64 {
        w.vphi * self.vphi + w.p * self.p + w.q * self.q
    }
}

fn check_dims(
    output: &[f64],
    target: &[f64],
    n_bus: usize,
    n_branch: usize,
) -> Result<(), ModelError> {
    let expected = 2 * n_bus + 2 * n_branch;
    if output.len() != expected {
        return Err(ModelError::InputLength {
            got: output.len(),
            expected,
        });
    }
    if target.len() != expected {
        return Err(ModelError::TargetLength {
            got: target.len(),
            expected,
        });
    }
    Ok(())
}

/// Per-group means of squared residuals for one sample.
pub fn loss_terms(
    output: &[f64],
    target: &[f64],
    n_bus: usize,
    n_branch: usize,
) -> Result<LossTerms, ModelError> {
    check_dims(output, target, n_bus, n_branch)?;
    let mean_sq = |range: std::ops::Range<usize>| -> f64 {
        let len = range.len() as f64;
        range.map(|k| (output[k] - target[k]).powi(2)).sum::<f64>() / len
    };
    let (n, nb) = (n_bus, n_branch);
    Ok(LossTerms {
        vphi: mean_sq(0..2 * n),
        p: mean_sq(2 * n..2 * n + nb),
        q: mean_sq(2 * n + nb..2 * n + 2 * nb),
    })
}

/// Weighted composite loss for one sample.
pub fn loss(
    output: &[f64],
    target: &[f64],
    n_bus: usize,
    n_branch: usize,
    weights: &LossWeights,
) -> Result<f64, ModelError> {
    Ok(loss_terms(output, target, n_bus, n_branch)?.total(weights))
}

/// ∂L/∂output for one sample: `2 w_g (output_k − target_k) / |group|`.
fn loss_cotangent(
    output: &[f64],
    target: &[f64],
    n_bus: usize,
    n_branch: usize,
    w: &LossWeights,
) -> Vec<f64> {
    let (n, nb) = (n_bus, n_branch);
    let mut c = vec![0.0; output.len()];
    for k in 0..2 * n {
        c[k] = 2.0 * w.vphi * (output[k] - target[k]) / (2 * n) as f64;
    }
    for k in 2 * n..2 * n + nb {
        c[k] = 2.0 * w.p * (output[k] - target[k]) / nb as f64;
    }
    for k in 2 * n + nb..2 * n + 2 * nb {
        c[k] = 2.0 * w.q * (output[k] - target[k]) / nb as f64;
    }
    c
}

fn require_nonempty(batch: &[NormPair]) -> Result<(), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::BadShape("batch is empty".into()));
    }
    Ok(())
}

/// Mean composite loss over a batch of normalized pairs.
pub fn batch_loss(
    model: &Model,
    params: &FlatParams,
    batch: &[NormPair],
    noise: Option<&NoiseSpec>,
    weights: &LossWeights,
) -> Result<f64, ModelError> {
    require_nonempty(batch)?;
    let (n, nb) = (model.n_bus(), model.n_branch());
    let per: Result<Vec<f64>, ModelError> = batch
        .par_iter()
        .map(|(x, t)| {
            let out = model.output(params, x, noise)?;
            loss(&out, t, n, nb, weights)
        })
        .collect();
    let per = per?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

/// Mean loss and its gradient with respect to the flat parameters.
pub fn batch_grad(
    model: &Model,
    params: &FlatParams,
    batch: &[NormPair],
    noise: Option<&NoiseSpec>,
    weights: &LossWeights,
) -> Result<(f64, Vec<f64>), ModelError> {
    require_nonempty(batch)?;
    let (n, nb) = (model.n_bus(), model.n_branch());
    let per: Result<Vec<(f64, Vec<f64>)>, ModelError> = batch
        .par_iter()
        .map(|(x, t)| {
            let out = model.output(params, x, noise)?;
            let l = loss(&out, t, n, nb, weights)?;
            let c = loss_cotangent(&out, t, n, nb, weights);
            let g = model.vjp(params, x, noise, &c)?;
            Ok((l, g))
        })
        .collect();
    let per = per?;

    let inv = 1.0 / per.len() as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; model.param_count()];
    for (l, g) in &per {
        total += l;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    for g in &mut grad {
        *g *= inv;
    }
    Ok((total * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerflow::{branch_flows, Branch, Bus, BusKind, Norms, PowerCase, Sample};
    use approx::assert_abs_diff_eq;

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
                b_charge: 0.05,
                tap: 0.97,
            }],
            gens: vec![],
        }
    }

    /// Targets built from actual flow evaluations, so they are reachable.
    fn toy_samples(case: &PowerCase) -> Vec<Sample> {
        let states = [
            ([1.02, 0.98], [0.00, -0.04], [0.3, -0.1, 0.2, 0.5]),
            ([1.02, 1.00], [0.00, -0.02], [-0.2, 0.4, -0.3, 0.1]),
            ([1.02, 0.96], [0.00, -0.06], [0.5, 0.2, 0.0, -0.4]),
            ([1.02, 1.01], [0.00, -0.01], [0.1, -0.3, 0.4, 0.2]),
        ];
        states
            .iter()
            .map(|(v, phi, input)| {
                let flows = branch_flows(v, phi, case).unwrap();
                let mut target = v.to_vec();
                target.extend_from_slice(phi);
                target.push(flows[0].p_from);
                target.push(flows[0].q_from);
                Sample {
                    input: input.to_vec(),
                    target,
                }
            })
            .collect()
    }

    fn toy_model() -> (Model, Vec<NormPair>) {
        let case = two_bus_case();
        let samples = toy_samples(&case);
        let norms = Norms::fit(&samples);
        let model = Model::new_hybrid(case, norms, 2, 2).unwrap();
        let batch = model.normalize_batch(&samples);
        (model, batch)
    }

    #[test]
    fn zero_residual_means_zero_loss() {
        let out = [0.4, -0.2, 0.1, 0.9, 0.3, -0.5];
        assert_eq!(loss(&out, &out, 2, 1, &LossWeights::default()).unwrap(), 0.0);
    }

    #[test]
    fn uniform_voltage_offset_gives_its_square() {
        // flows identical, every (v, phi) output off by 0.1
        let target = [0.5, -0.3, 0.2, 0.0, 1.0, -1.0];
        let output = [0.6, -0.2, 0.3, 0.1, 1.0, -1.0];
        let terms = loss_terms(&output, &target, 2, 1).unwrap();
        assert_abs_diff_eq!(terms.vphi, 0.01, epsilon = 1e-15);
        assert_eq!(terms.p, 0.0);
        assert_eq!(terms.q, 0.0);
        assert_abs_diff_eq!(
            loss(&output, &target, 2, 1, &LossWeights::default()).unwrap(),
            0.01,
            epsilon = 1e-15
        );
    }

    #[test]
    fn doubling_residuals_quadruples_the_loss() {
        let target = [0.1, 0.2, -0.3, 0.4, 0.5, -0.6];
        let near: Vec<f64> = target.iter().map(|t| t + 0.05).collect();
        let far: Vec<f64> = target.iter().map(|t| t + 0.10).collect();
        let w = LossWeights::default();
        let l1 = loss(&near, &target, 2, 1, &w).unwrap();
        let l2 = loss(&far, &target, 2, 1, &w).unwrap();
        assert_abs_diff_eq!(l2, 4.0 * l1, epsilon = 1e-12);
    }

    #[test]
    fn group_weights_scale_their_terms() {
        let target = [0.0; 6];
        let output = [1.0, 1.0, 1.0, 1.0, 2.0, 3.0];
        let w = LossWeights {
            vphi: 2.0,
            p: 0.5,
            q: 0.0,
        };
        // vphi mean 1, p mean 4, q mean 9
        assert_abs_diff_eq!(
            loss(&output, &target, 2, 1, &w).unwrap(),
            2.0 + 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        assert!(loss(&[0.0; 5], &[0.0; 6], 2, 1, &LossWeights::default()).is_err());
        assert!(loss(&[0.0; 6], &[0.0; 5], 2, 1, &LossWeights::default()).is_err());
    }

    #[test]
    fn batch_gradient_matches_finite_differences_on_every_component() {
        let (model, batch) = toy_model();
        let params = model.init_params(11);
        let w = LossWeights::default();
        let (l0, grad) = batch_grad(&model, &params, &batch, None, &w).unwrap();
        assert!(l0.is_finite());
        assert_eq!(grad.len(), model.param_count());

        let h = 1e-6;
        for j in 0..params.len() {
            let mut hi = params.clone();
            let mut lo = params.clone();
            hi.values[j] += h;
            lo.values[j] -= h;
            let fd = (batch_loss(&model, &hi, &batch, None, &w).unwrap()
                - batch_loss(&model, &lo, &batch, None, &w).unwrap())
                / (2.0 * h);
            let tol = 1e-5 * fd.abs().max(1.0);
            assert!(
                (grad[j] - fd).abs() < tol,
                "component {j}: grad {} vs fd {fd}",
                grad[j]
            );
        }
    }

    #[test]
    fn batch_gradient_matches_finite_differences_under_noise() {
        let (model, batch) = toy_model();
        let params = model.init_params(5);
        let w = LossWeights::default();
        let noise = NoiseSpec {
            bit_flip: 0.02,
            phase_flip: 0.0,
            depolarizing: 0.08,
        };
        let (_, grad) = batch_grad(&model, &params, &batch[..2], Some(&noise), &w).unwrap();

        let h = 1e-6;
        for j in (0..params.len()).step_by(3) {
            let mut hi = params.clone();
            let mut lo = params.clone();
            hi.values[j] += h;
            lo.values[j] -= h;
            let fd = (batch_loss(&model, &hi, &batch[..2], Some(&noise), &w).unwrap()
                - batch_loss(&model, &lo, &batch[..2], Some(&noise), &w).unwrap())
                / (2.0 * h);
            let tol = 1e-5 * fd.abs().max(1.0);
            assert!((grad[j] - fd).abs() < tol);
        }
    }

    #[test]
    fn duplicated_sample_leaves_the_gradient_unchanged() {
        let (model, batch) = toy_model();
        let params = model.init_params(2);
        let w = LossWeights::default();
        let single = vec![batch[0].clone()];
        let triple = vec![batch[0].clone(), batch[0].clone(), batch[0].clone()];
        let (l1, g1) = batch_grad(&model, &params, &single, None, &w).unwrap();
        let (l3, g3) = batch_grad(&model, &params, &triple, None, &w).unwrap();
        // identical up to the one rounding step in mean-of-three
        assert_abs_diff_eq!(l1, l3, epsilon = 1e-12 * l1.abs().max(1.0));
        for (a, b) in g1.iter().zip(&g3) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_vanishes_at_zero_residual() {
        let (model, _) = toy_model();
        let params = model.init_params(9);
        // make the target equal the model's own output
        let x = vec![0.2, -0.4, 0.6, 0.1];
        let out = model.output(&params, &x, None).unwrap();
        let batch = vec![(x, out)];
        let (l, g) = batch_grad(&model, &params, &batch, None, &LossWeights::default()).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|gi| gi.abs() < 1e-14));
    }

    #[test]
    fn empty_batch_is_rejected() {
        let (model, _) = toy_model();
        let params = model.init_params(0);
        assert!(batch_loss(&model, &params, &[], None, &LossWeights::default()).is_err());
        assert!(batch_grad(&model, &params, &[], None, &LossWeights::default()).is_err());
    }
}
