//! Shift-rule gradients.
//!
//! Every parameterized gate here is a rotation exp(−iθσ/2) with σ² = I, so
//! each ⟨Z_k⟩ is of the form a + b·cos(θ_j + c) in any single angle and the
//! exact derivative is the two-point rule
//!
//! ```text
//! ∂f/∂θ_j = (f(θ_j + π/2) − f(θ_j − π/2)) / 2
//! ```
//!
//! Channels are linear in ρ, so the rule stays exact under noise. Feature
//! gradients use the same rule on the encoding angles; a feature referenced
//! by several encoding ops gets one shifted evaluation pair per occurrence.

use super::circuit::{eval_with_encoding_angles, CircuitSpec};
use super::noise::NoiseSpec;
use super::QuantumError;
use std::f64::consts::FRAC_PI_2;

fn check(spec: &CircuitSpec, features: &[f64], params: &[f64]) -> Result<(), QuantumError> {
    spec.validate()?;
    if features.len() != spec.feature_count() {
        return Err(QuantumError::FeatureLength {
            got: features.len(),
            expected: spec.feature_count(),
        });
    }
    if params.len() != spec.param_count() {
        return Err(QuantumError::ParamLength {
            got: params.len(),
            expected: spec.param_count(),
        });
    }
    Ok(())
}

fn angles_of(spec: &CircuitSpec, features: &[f64]) -> Vec<f64> {
    spec.encoding.iter().map(|op| features[op.feature]).collect()
}

/// ∂⟨Z_k⟩/∂params[j] for every k, via two full evaluations.
pub fn param_shift_grad(
    features: &[f64],
    params: &[f64],
    spec: &CircuitSpec,
    noise: Option<&NoiseSpec>,
    j: usize,
) -> Result<Vec<f64>, QuantumError> {
    check(spec, features, params)?;
    if j >= params.len() {
        return Err(QuantumError::ParamIndex {
            index: j,
            count: params.len(),
        });
    }
    let angles = angles_of(spec, features);
    let mut shifted = params.to_vec();
    shifted[j] = params[j] + FRAC_PI_2;
    let hi = eval_with_encoding_angles(spec, &angles, &shifted, noise)?;
    shifted[j] = params[j] - FRAC_PI_2;
    let lo = eval_with_encoding_angles(spec, &angles, &shifted, noise)?;
    Ok(hi.iter().zip(&lo).map(|(h, l)| (h - l) / 2.0).collect())
}

/// ∂⟨Z_k⟩/∂features[i] for every k, summing the shift rule over each
/// encoding op that reads feature i.
pub fn feature_shift_grad(
    features: &[f64],
    params: &[f64],
    spec: &CircuitSpec,
    noise: Option<&NoiseSpec>,
    i: usize,
) -> Result<Vec<f64>, QuantumError> {
    check(spec, features, params)?;
    if i >= features.len() {
        return Err(QuantumError::FeatureIndex {
            index: i,
            count: features.len(),
        });
    }
    let base = angles_of(spec, features);
    let mut grad = vec![0.0; spec.m];
    for (op_idx, op) in spec.encoding.iter().enumerate() {
        if op.feature != i {
            continue;
        }
        let mut angles = base.clone();
        angles[op_idx] = base[op_idx] + FRAC_PI_2;
        let hi = eval_with_encoding_angles(spec, &angles, params, noise)?;
        angles[op_idx] = base[op_idx] - FRAC_PI_2;
        let lo = eval_with_encoding_angles(spec, &angles, params, noise)?;
        for (g, (h, l)) in grad.iter_mut().zip(hi.iter().zip(&lo)) {
            *g += (h - l) / 2.0;
        }
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::circuit::evaluate_circuit;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn single_ry_gradient_is_negative_sine() {
        // m=1, L=1: ⟨Z⟩ = cos(params[0]); Rz leaves Z untouched.
        let spec = CircuitSpec::standard(1, 1).unwrap();
        let features = [0.0, 0.0];
        for theta in [0.0, PI / 2.0, 1.1, -0.7] {
            let g = param_shift_grad(&features, &[theta, 0.3], &spec, None, 0).unwrap();
            assert_abs_diff_eq!(g[0], -theta.sin(), epsilon = 1e-12);
        }
        let g = param_shift_grad(&features, &[PI / 2.0, 0.0], &spec, None, 0).unwrap();
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-12);
        let g = param_shift_grad(&features, &[0.0, 0.0], &spec, None, 0).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-12);
    }

    fn fd_param(
        features: &[f64],
        params: &[f64],
        spec: &CircuitSpec,
        noise: Option<&NoiseSpec>,
        j: usize,
        h: f64,
    ) -> Vec<f64> {
        let mut hi_p = params.to_vec();
        hi_p[j] += h;
        let mut lo_p = params.to_vec();
        lo_p[j] -= h;
        let hi = evaluate_circuit(features, &hi_p, spec, noise).unwrap();
        let lo = evaluate_circuit(features, &lo_p, spec, noise).unwrap();
        hi.iter().zip(&lo).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    }

    #[test]
    fn shift_rule_matches_finite_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let spec = CircuitSpec::standard(2, 2).unwrap();
        let features: Vec<f64> = (0..4).map(|_| rng.gen_range(-PI..PI)).collect();
        let params: Vec<f64> = (0..8).map(|_| rng.gen_range(-PI..PI)).collect();
        for j in 0..8 {
            let shift = param_shift_grad(&features, &params, &spec, None, j).unwrap();
            let fd = fd_param(&features, &params, &spec, None, j, 1e-5);
            for (a, b) in shift.iter().zip(&fd) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn shift_rule_stays_exact_under_noise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let spec = CircuitSpec::standard(2, 1).unwrap();
        let noise = NoiseSpec {
            bit_flip: 0.1,
            phase_flip: 0.1,
            depolarizing: 0.1,
        };
        let features: Vec<f64> = (0..4).map(|_| rng.gen_range(-PI..PI)).collect();
        let params: Vec<f64> = (0..4).map(|_| rng.gen_range(-PI..PI)).collect();
        for j in 0..4 {
            let shift =
                param_shift_grad(&features, &params, &spec, Some(&noise), j).unwrap();
            let fd = fd_param(&features, &params, &spec, Some(&noise), j, 1e-5);
            for (a, b) in shift.iter().zip(&fd) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn feature_gradients_match_finite_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let spec = CircuitSpec::standard(2, 2).unwrap();
        let features: Vec<f64> = (0..4).map(|_| rng.gen_range(-PI..PI)).collect();
        let params: Vec<f64> = (0..8).map(|_| rng.gen_range(-PI..PI)).collect();
        let h = 1e-5;
        for i in 0..4 {
            let shift = feature_shift_grad(&features, &params, &spec, None, i).unwrap();
            let mut hi_f = features.clone();
            hi_f[i] += h;
            let mut lo_f = features.clone();
            lo_f[i] -= h;
            let hi = evaluate_circuit(&hi_f, &params, &spec, None).unwrap();
            let lo = evaluate_circuit(&lo_f, &params, &spec, None).unwrap();
            for ((a, hv), lv) in shift.iter().zip(&hi).zip(&lo) {
                assert_abs_diff_eq!(*a, (hv - lv) / (2.0 * h), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn repeated_feature_reference_sums_occurrences() {
        // Both encoding ops read feature 0: f(x) = ⟨Z⟩ after Ry(x)Rz(x)…
        // the chain rule needs both occurrence terms.
        let spec = CircuitSpec {
            m: 1,
            layers: 0,
            encoding: vec![
                crate::quantum::circuit::EncodingOp {
                    qubit: 0,
                    axis: crate::quantum::circuit::Axis::Y,
                    feature: 0,
                },
                crate::quantum::circuit::EncodingOp {
                    qubit: 0,
                    axis: crate::quantum::circuit::Axis::Y,
                    feature: 0,
                },
            ],
        };
        // ⟨Z⟩ = cos(2x) → derivative −2 sin(2x).
        let x = 0.4;
        let g = feature_shift_grad(&[x, 0.0], &[], &spec, None, 0).unwrap();
        assert_abs_diff_eq!(g[0], -2.0 * (2.0 * x).sin(), epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_indices_error() {
        let spec = CircuitSpec::standard(1, 1).unwrap();
        assert!(matches!(
            param_shift_grad(&[0.0, 0.0], &[0.0, 0.0], &spec, None, 2),
            Err(QuantumError::ParamIndex { index: 2, count: 2 })
        ));
        assert!(matches!(
            feature_shift_grad(&[0.0, 0.0], &[0.0, 0.0], &spec, None, 5),
            Err(QuantumError::FeatureIndex { index: 5, count: 2 })
        ));
    }
}
