//! Dense statevector simulation.
//!
//! Gate matrices, acting on the (|0⟩, |1⟩) pair of the touched qubit:
//!
//! ```text
//! Ry(θ) = [[cos θ/2, −sin θ/2],   Rz(θ) = [[e^(−iθ/2), 0],
//!          [sin θ/2,  cos θ/2]]            [0, e^(iθ/2)]]
//! ```
//!
//! CNOT flips the target bit wherever the control bit is set. All three are
//! applied in place over index pairs differing only in the touched bit.

use super::{QuantumError, MAX_QUBITS};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    m: usize,
    amps: Vec<Complex64>,
}

/// The all-zeros computational basis state |0…0⟩.
pub fn init_state(m: usize) -> Result<StateVector, QuantumError> {
    StateVector::new(m)
}

impl StateVector {
    pub fn new(m: usize) -> Result<Self, QuantumError> {
        if !(1..=MAX_QUBITS).contains(&m) {
            return Err(QuantumError::BadQubitCount { m });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << m];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { m, amps })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), QuantumError> {
        if qubit >= self.m {
            Err(QuantumError::QubitOutOfRange { qubit, m: self.m })
        } else {
            Ok(())
        }
    }

    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<(), QuantumError> {
        self.check_qubit(qubit)?;
        let (sin, cos) = (theta / 2.0).sin_cos();
        let bit = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = cos * a0 - sin * a1;
                self.amps[i | bit] = sin * a0 + cos * a1;
            }
        }
        Ok(())
    }

    pub fn apply_rz(&mut self, qubit: usize, theta: f64) -> Result<(), QuantumError> {
        self.check_qubit(qubit)?;
        let phase0 = Complex64::from_polar(1.0, -theta / 2.0);
        let phase1 = Complex64::from_polar(1.0, theta / 2.0);
        let bit = 1usize << qubit;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & bit == 0 { phase0 } else { phase1 };
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), QuantumError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(QuantumError::ControlEqualsTarget { qubit: control });
        }
        let (cb, tb) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
        Ok(())
    }

    /// ⟨Z_qubit⟩ = Σ_i |a_i|² (1 − 2·bit_qubit(i)).
    pub fn z_expectation(&self, qubit: usize) -> Result<f64, QuantumError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let sign = if i & bit == 0 { 1.0 } else { -1.0 };
                sign * a.norm_sqr()
            })
            .sum())
    }

    pub fn z_expectations(&self) -> Vec<f64> {
        (0..self.m)
            .map(|q| self.z_expectation(q).expect("qubit in range"))
            .collect()
    }
}
