//! Nodal admittance matrix assembly.
//!
//! For a branch from `f` to `t` with series admittance `ys = 1/(r + jx)`,
//! charging `b_c`, and tap ratio `t_r` on the from side:
//!
//! ```text
//! Y[f][f] += (ys + j b_c/2) / t_r²      Y[f][t] -= ys / t_r
//! Y[t][t] +=  ys + j b_c/2              Y[t][f] -= ys / t_r
//! ```
//!
//! plus `j shunt_b` on each bus diagonal. Dense storage: the networks here
//! top out at 118 buses.

use super::case::PowerCase;
use num_complex::Complex64;

/// Dense n x n complex admittance matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl AdmittanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] += v;
    }

    /// Conductance part G[i][j].
    #[inline]
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).re
    }

    /// Susceptance part B[i][j].
    #[inline]
    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).im
    }

    /// Row i as a slice of complex entries.
    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Assembles the admittance matrix of a validated case.
pub fn build_ybus(case: &PowerCase) -> AdmittanceMatrix {
    let n = case.n_bus();
    let mut y = AdmittanceMatrix::zeros(n);
    for br in &case.branches {
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let shunt = Complex64::new(0.0, br.b_charge / 2.0);
        let tap = br.tap;
        y.add(br.from, br.from, (ys + shunt) / (tap * tap));
        y.add(br.to, br.to, ys + shunt);
        y.add(br.from, br.to, -ys / tap);
        y.add(br.to, br.from, -ys / tap);
    }
    for bus in &case.buses {
        y.add(bus.id, bus.id, Complex64::new(0.0, bus.shunt_b));
    }
    y
}
