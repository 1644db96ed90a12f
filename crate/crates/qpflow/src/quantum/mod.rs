//! Exact simulation of the small variational circuits used by the hybrid
//! model: angle encoding, Ry/Rz + CNOT-ring ansatz layers, Pauli-Z readout,
//! per-gate noise channels, and parameter-shift gradients.
//!
//! Pure states are [`StateVector`]s over 2^m little-endian amplitudes
//! (qubit 0 is the least-significant bit of the basis index); noisy
//! evolution runs on a [`DensityMatrix`]. Both paths share the same gate
//! conventions, so they agree exactly when every channel probability is 0.

pub mod circuit;
pub mod density;
pub mod noise;
pub mod shift;
pub mod state;

pub use circuit::{circuit_state, evaluate_circuit, evaluate_density, Axis, CircuitSpec, EncodingOp};
pub use density::{apply_channel, DensityMatrix};
pub use noise::{ChannelKind, NoiseSpec};
pub use shift::{feature_shift_grad, param_shift_grad};
pub use state::{init_state, StateVector};

use thiserror::Error;

/// Exact simulation is budgeted to 12 qubits (dense 4096-amplitude states).
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("qubit count {m} outside 1..={MAX_QUBITS}")]
    BadQubitCount { m: usize },
    #[error("qubit {qubit} out of range for {m} qubits")]
    QubitOutOfRange { qubit: usize, m: usize },
    #[error("CNOT control and target are both qubit {qubit}")]
    ControlEqualsTarget { qubit: usize },
    #[error("{got} features, circuit expects {expected}")]
    FeatureLength { got: usize, expected: usize },
    #[error("{got} parameters, circuit expects {expected}")]
    ParamLength { got: usize, expected: usize },
    #[error("parameter index {index} out of range for {count} parameters")]
    ParamIndex { index: usize, count: usize },
    #[error("feature index {index} out of range for {count} features")]
    FeatureIndex { index: usize, count: usize },
    #[error("probability {p} outside [0, 1]")]
    BadProbability { p: f64 },
    #[error("circuit spec: {0}")]
    BadSpec(String),
}
