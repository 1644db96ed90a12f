//! Circuit structure: angle encoding followed by entangling ansatz layers.
//!
//! The encoding applies one rotation per [`EncodingOp`], in order, with the
//! angle taken from the referenced feature. The standard map puts, for each
//! qubit k, `Ry(features[k])` then `Rz(features[m+k])`, consuming 2m
//! features. Angles are 2π-periodic, so callers keep features in [−π, π]
//! (the hybrid model's encoder guarantees it by construction); no clamping
//! happens here, which keeps shift-rule gradients exact.
//!
//! Each ansatz layer l applies, per qubit k, `Ry(params[2ml + 2k])` then
//! `Rz(params[2ml + 2k + 1])`, followed by the CNOT ring k → (k+1) mod m
//! for k = 0..m−1 (omitted for a single qubit). Total parameter count 2mL.
//!
//! With a [`NoiseSpec`], evolution runs on a density matrix and the
//! configured channels hit every touched qubit after each gate.

use super::density::DensityMatrix;
use super::noise::NoiseSpec;
use super::state::StateVector;
use super::{QuantumError, MAX_QUBITS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Y,
    Z,
}

/// One encoding rotation: `axis(features[feature])` on `qubit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingOp {
    pub qubit: usize,
    pub axis: Axis,
    pub feature: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub m: usize,
    pub layers: usize,
    pub encoding: Vec<EncodingOp>,
}

impl CircuitSpec {
    /// Per-qubit Ry/Rz angle encoding over 2m features.
    pub fn standard(m: usize, layers: usize) -> Result<Self, QuantumError> {
        let mut encoding = Vec::with_capacity(2 * m);
        for qubit in 0..m {
            encoding.push(EncodingOp {
                qubit,
                axis: Axis::Y,
                feature: qubit,
            });
            encoding.push(EncodingOp {
                qubit,
                axis: Axis::Z,
                feature: m + qubit,
            });
        }
        let spec = CircuitSpec { m, layers, encoding };
        spec.validate()?;
        Ok(spec)
    }

    pub fn param_count(&self) -> usize {
        2 * self.m * self.layers
    }

    pub fn feature_count(&self) -> usize {
        2 * self.m
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        if !(1..=MAX_QUBITS).contains(&self.m) {
            return Err(QuantumError::BadQubitCount { m: self.m });
        }
        for op in &self.encoding {
            if op.qubit >= self.m {
                return Err(QuantumError::BadSpec(format!(
                    "encoding touches qubit {} of {}",
                    op.qubit, self.m
                )));
            }
            if op.feature >= self.feature_count() {
                return Err(QuantumError::BadSpec(format!(
                    "encoding reads feature {} of {}",
                    op.feature,
                    self.feature_count()
                )));
            }
        }
        Ok(())
    }
}

/// A resolved gate in execution order.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Gate {
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot(usize, usize),
}

/// Full gate list given one angle per encoding op and the flat parameters.
pub(crate) fn gate_sequence(
    spec: &CircuitSpec,
    encoding_angles: &[f64],
    params: &[f64],
) -> Vec<Gate> {
    let m = spec.m;
    let mut gates =
        Vec::with_capacity(spec.encoding.len() + spec.layers * (2 * m + if m > 1 { m } else { 0 }));
    for (op, &angle) in spec.encoding.iter().zip(encoding_angles) {
        gates.push(match op.axis {
            Axis::Y => Gate::Ry(op.qubit, angle),
            Axis::Z => Gate::Rz(op.qubit, angle),
        });
    }
    for l in 0..spec.layers {
        for k in 0..m {
            gates.push(Gate::Ry(k, params[2 * m * l + 2 * k]));
            gates.push(Gate::Rz(k, params[2 * m * l + 2 * k + 1]));
        }
        if m > 1 {
            for k in 0..m {
                gates.push(Gate::Cnot(k, (k + 1) % m));
            }
        }
    }
    gates
}

fn check_lengths(
    spec: &CircuitSpec,
    features: &[f64],
    params: &[f64],
) -> Result<(), QuantumError> {
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

fn encoding_angles(spec: &CircuitSpec, features: &[f64]) -> Vec<f64> {
    spec.encoding.iter().map(|op| features[op.feature]).collect()
}

/// Applies the standard per-qubit Ry/Rz encoding to a pure state.
pub fn encode(state: &mut StateVector, features: &[f64]) -> Result<(), QuantumError> {
    let m = state.m();
    if features.len() != 2 * m {
        return Err(QuantumError::FeatureLength {
            got: features.len(),
            expected: 2 * m,
        });
    }
    for qubit in 0..m {
        state.apply_ry(qubit, features[qubit])?;
        state.apply_rz(qubit, features[m + qubit])?;
    }
    Ok(())
}

pub(crate) fn run_statevector(
    spec: &CircuitSpec,
    encoding_angles: &[f64],
    params: &[f64],
) -> Result<StateVector, QuantumError> {
    let mut state = StateVector::new(spec.m)?;
    for gate in gate_sequence(spec, encoding_angles, params) {
        match gate {
            Gate::Ry(q, theta) => state.apply_ry(q, theta)?,
            Gate::Rz(q, theta) => state.apply_rz(q, theta)?,
            Gate::Cnot(c, t) => state.apply_cnot(c, t)?,
        }
    }
    Ok(state)
}

pub(crate) fn run_density(
    spec: &CircuitSpec,
    encoding_angles: &[f64],
    params: &[f64],
    noise: &NoiseSpec,
) -> Result<DensityMatrix, QuantumError> {
    noise.validate()?;
    let mut rho = DensityMatrix::new_ground(spec.m)?;
    for gate in gate_sequence(spec, encoding_angles, params) {
        let touched: [Option<usize>; 2] = match gate {
            Gate::Ry(q, theta) => {
                rho.apply_ry(q, theta)?;
                [Some(q), None]
            }
            Gate::Rz(q, theta) => {
                rho.apply_rz(q, theta)?;
                [Some(q), None]
            }
            Gate::Cnot(c, t) => {
                rho.apply_cnot(c, t)?;
                [Some(c), Some(t)]
            }
        };
        for q in touched.into_iter().flatten() {
            for (kind, p) in noise.active() {
                rho.apply_channel(kind, p, q)?;
            }
        }
    }
    Ok(rho)
}

pub(crate) fn eval_with_encoding_angles(
    spec: &CircuitSpec,
    encoding_angles: &[f64],
    params: &[f64],
    noise: Option<&NoiseSpec>,
) -> Result<Vec<f64>, QuantumError> {
    match noise {
        Some(n) if !n.is_off() => {
            Ok(run_density(spec, encoding_angles, params, n)?.z_expectations())
        }
        other => {
            if let Some(n) = other {
                n.validate()?;
            }
            Ok(run_statevector(spec, encoding_angles, params)?.z_expectations())
        }
    }
}

/// The noiseless final state, for inspection and golden-vector tests.
pub fn circuit_state(
    features: &[f64],
    params: &[f64],
    spec: &CircuitSpec,
) -> Result<StateVector, QuantumError> {
    check_lengths(spec, features, params)?;
    run_statevector(spec, &encoding_angles(spec, features), params)
}

/// Evaluates ⟨Z_k⟩ for k = 0..m−1. Noiseless (or all-zero noise) inputs run
/// on the statevector; otherwise on the density matrix with channels.
pub fn evaluate_circuit(
    features: &[f64],
    params: &[f64],
    spec: &CircuitSpec,
    noise: Option<&NoiseSpec>,
) -> Result<Vec<f64>, QuantumError> {
    check_lengths(spec, features, params)?;
    eval_with_encoding_angles(spec, &encoding_angles(spec, features), params, noise)
}

/// Forces the density-matrix path regardless of noise level; agrees with
/// [`evaluate_circuit`] exactly when the noise is all-zero.
pub fn evaluate_density(
    features: &[f64],
    params: &[f64],
    spec: &CircuitSpec,
    noise: &NoiseSpec,
) -> Result<Vec<f64>, QuantumError> {
    check_lengths(spec, features, params)?;
    Ok(run_density(spec, &encoding_angles(spec, features), params, noise)?.z_expectations())
}
