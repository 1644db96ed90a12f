//! Density-matrix simulation for noisy circuits.
//!
//! A gate U acts as ρ → UρU†, implemented as the statevector update over
//! row-index pairs followed by the conjugate update over column-index
//! pairs. Channels act directly on matrix entries:
//!
//! ```text
//! bit-flip:     ρ'[i][j] = (1−p)ρ[i][j] + p ρ[i^q][j^q]
//! phase-flip:   ρ'[i][j] = ρ[i][j]·(1 − 2p) when bits q of i, j differ
//! depolarizing: ρ'[i][j] = (1−p)ρ[i][j] + (p/2)(ρ[i₀][j₀] + ρ[i₁][j₁])
//!               when bits q of i, j agree (i₀/i₁: bit q cleared/set)
//! ```
//!
//! where `^q` flips bit q. All three preserve trace and Hermiticity.

use super::noise::ChannelKind;
use super::state::StateVector;
use super::{QuantumError, MAX_QUBITS};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: usize,
    dim: usize,
    /// Row-major dim × dim entries.
    entries: Vec<Complex64>,
}

/// Free-function form of [`DensityMatrix::apply_channel`].
pub fn apply_channel(
    rho: &mut DensityMatrix,
    kind: ChannelKind,
    p: f64,
    qubit: usize,
) -> Result<(), QuantumError> {
    rho.apply_channel(kind, p, qubit)
}

impl DensityMatrix {
    /// |0…0⟩⟨0…0|.
    pub fn new_ground(m: usize) -> Result<Self, QuantumError> {
        if !(1..=MAX_QUBITS).contains(&m) {
            return Err(QuantumError::BadQubitCount { m });
        }
        let dim = 1 << m;
        let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
        entries[0] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { m, dim, entries })
    }

    /// The pure-state projector |ψ⟩⟨ψ|.
    pub fn from_state(state: &StateVector) -> Self {
        let amps = state.amplitudes();
        let dim = amps.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for a in amps {
            for b in amps {
                entries.push(a * b.conj());
            }
        }
        DensityMatrix {
            m: state.m(),
            dim,
            entries,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), QuantumError> {
        if qubit >= self.m {
            Err(QuantumError::QubitOutOfRange { qubit, m: self.m })
        } else {
            Ok(())
        }
    }

    /// Applies a general single-qubit gate [[u00,u01],[u10,u11]] as UρU†.
    fn apply_one_qubit(&mut self, qubit: usize, u: [[Complex64; 2]; 2]) {
        let bit = 1usize << qubit;
        let dim = self.dim;
        // Rows: ρ ← Uρ.
        for r in 0..dim {
            if r & bit == 0 {
                for c in 0..dim {
                    let x0 = self.entries[r * dim + c];
                    let x1 = self.entries[(r | bit) * dim + c];
                    self.entries[r * dim + c] = u[0][0] * x0 + u[0][1] * x1;
                    self.entries[(r | bit) * dim + c] = u[1][0] * x0 + u[1][1] * x1;
                }
            }
        }
        // Columns: ρ ← ρU†.
        for c in 0..dim {
            if c & bit == 0 {
                for r in 0..dim {
                    let x0 = self.entries[r * dim + c];
                    let x1 = self.entries[r * dim + (c | bit)];
                    self.entries[r * dim + c] = x0 * u[0][0].conj() + x1 * u[0][1].conj();
                    self.entries[r * dim + (c | bit)] = x0 * u[1][0].conj() + x1 * u[1][1].conj();
                }
            }
        }
    }

    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<(), QuantumError> {
        self.check_qubit(qubit)?;
        let (sin, cos) = (theta / 2.0).sin_cos();
        let r = |x: f64| Complex64::new(x, 0.0);
        self.apply_one_qubit(qubit, [[r(cos), r(-sin)], [r(sin), r(cos)]]);
        Ok(())
    }

    pub fn apply_rz(&mut self, qubit: usize, theta: f64) -> Result<(), QuantumError> {
        self.check_qubit(qubit)?;
        let zero = Complex64::new(0.0, 0.0);
        self.apply_one_qubit(
            qubit,
            [
                [Complex64::from_polar(1.0, -theta / 2.0), zero],
                [zero, Complex64::from_polar(1.0, theta / 2.0)],
            ],
        );
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), QuantumError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(QuantumError::ControlEqualsTarget { qubit: control });
        }
        let (cb, tb) = (1usize << control, 1usize << target);
        let dim = self.dim;
        // CNOT is the permutation i ↦ i^tb on control-set indices; conjugation
        // permutes rows then columns.
        for r in 0..dim {
            if r & cb != 0 && r & tb == 0 {
                for c in 0..dim {
                    self.entries.swap(r * dim + c, (r | tb) * dim + c);
                }
            }
        }
        for c in 0..dim {
            if c & cb != 0 && c & tb == 0 {
                for r in 0..dim {
                    self.entries.swap(r * dim + c, r * dim + (c | tb));
                }
            }
        }
        Ok(())
    }

    pub fn apply_channel(
        &mut self,
        kind: ChannelKind,
        p: f64,
        qubit: usize,
    ) -> Result<(), QuantumError> {
        self.check_qubit(qubit)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(QuantumError::BadProbability { p });
        }
        if p == 0.0 {
            return Ok(());
        }
        let bit = 1usize << qubit;
        let dim = self.dim;
        match kind {
            ChannelKind::BitFlip => {
                let old = self.entries.clone();
                for i in 0..dim {
                    for j in 0..dim {
                        self.entries[i * dim + j] = (1.0 - p) * old[i * dim + j]
                            + p * old[(i ^ bit) * dim + (j ^ bit)];
                    }
                }
            }
            ChannelKind::PhaseFlip => {
                let damp = 1.0 - 2.0 * p;
                for i in 0..dim {
                    for j in 0..dim {
                        if (i ^ j) & bit != 0 {
                            self.entries[i * dim + j] *= damp;
                        }
                    }
                }
            }
            ChannelKind::Depolarizing => {
                let old = self.entries.clone();
                for i in 0..dim {
                    for j in 0..dim {
                        let e = &mut self.entries[i * dim + j];
                        if (i ^ j) & bit == 0 {
                            let (i0, j0) = (i & !bit, j & !bit);
                            let (i1, j1) = (i | bit, j | bit);
                            *e = (1.0 - p) * old[i * dim + j]
                                + 0.5 * p * (old[i0 * dim + j0] + old[i1 * dim + j1]);
                        } else {
                            *e = (1.0 - p) * old[i * dim + j];
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// ⟨Z_qubit⟩ = Σ_i ρ[i][i]·(1 − 2·bit_qubit(i)); imaginary parts cancel
    /// for any Hermitian ρ.
    pub fn z_expectation(&self, qubit: usize) -> Result<f64, QuantumError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok((0..self.dim)
            .map(|i| {
                let sign = if i & bit == 0 { 1.0 } else { -1.0 };
                sign * self.entry(i, i).re
            })
            .sum())
    }

    pub fn z_expectations(&self) -> Vec<f64> {
        (0..self.m)
            .map(|q| self.z_expectation(q).expect("qubit in range"))
            .collect()
    }

    /// Largest deviation from Hermitian symmetry, for invariant checks.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }
}
