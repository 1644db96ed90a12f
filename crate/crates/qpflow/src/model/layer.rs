//! Dense layers: `y = act(W x + b)` with row-major `out×in` weights.
//!
//! The layer works on borrowed weight/bias slices so the caller can keep all
//! parameters in one flat vector. `backward` consumes the layer's own output
//! rather than the preactivation; for tanh the derivative is `1 − y²`, so no
//! extra cache is needed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

/// Shape and activation of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl DenseSpec {
    pub fn new(inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseSpec {
            inputs,
            outputs,
            activation,
        }
    }

    pub fn weight_count(&self) -> usize {
        self.outputs * self.inputs
    }

    pub fn bias_count(&self) -> usize {
        self.outputs
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    /// `act(W x + b)`; slice lengths are the caller's invariant.
    pub fn forward(&self, w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(w.len(), self.weight_count());
        debug_assert_eq!(b.len(), self.bias_count());
        debug_assert_eq!(x.len(), self.inputs);
        (0..self.outputs)
            .map(|o| {
                let row = &w[o * self.inputs..(o + 1) * self.inputs];
                let z = b[o] + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
                match self.activation {
                    Activation::Tanh => z.tanh(),
                    Activation::Identity => z,
                }
            })
            .collect()
    }

    /// Given the output cotangent `g`, returns `(grad_w, grad_b, grad_x)`.
    ///
    /// `y` must be this layer's own forward output at (`w`, `x`).
    pub fn backward(
        &self,
        w: &[f64],
        x: &[f64],
        y: &[f64],
        g: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        debug_assert_eq!(y.len(), self.outputs);
        debug_assert_eq!(g.len(), self.outputs);
        let gz: Vec<f64> = match self.activation {
            Activation::Tanh => y.iter().zip(g).map(|(yi, gi)| gi * (1.0 - yi * yi)).collect(),
            Activation::Identity => g.to_vec(),
        };
        let mut grad_w = vec![0.0; self.weight_count()];
        let mut grad_x = vec![0.0; self.inputs];
        for o in 0..self.outputs {
            let row = &w[o * self.inputs..(o + 1) * self.inputs];
            let gw_row = &mut grad_w[o * self.inputs..(o + 1) * self.inputs];
            for i in 0..self.inputs {
                gw_row[i] = gz[o] * x[i];
                grad_x[i] += row[i] * gz[o];
            }
        }
        (grad_w, gz, grad_x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_layer_is_affine() {
        let spec = DenseSpec::new(2, 2, Activation::Identity);
        let w = [1.0, 2.0, 3.0, 4.0]; // rows [1,2], [3,4]
        let b = [0.5, -0.5];
        let y = spec.forward(&w, &b, &[1.0, -1.0]);
        assert_abs_diff_eq!(y[0], 1.0 - 2.0 + 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(y[1], 3.0 - 4.0 - 0.5, epsilon = 1e-15);
    }

    #[test]
    fn tanh_layer_saturates() {
        let spec = DenseSpec::new(1, 1, Activation::Tanh);
        let y = spec.forward(&[50.0], &[0.0], &[1.0]);
        assert!((y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let spec = DenseSpec::new(3, 2, Activation::Tanh);
        let w: Vec<f64> = (0..6).map(|i| 0.3 * i as f64 - 0.8).collect();
        let b = vec![0.1, -0.2];
        let x = vec![0.4, -1.1, 0.7];
        let g = vec![0.9, -0.3];

        let y = spec.forward(&w, &b, &x);
        let (gw, gb, gx) = spec.backward(&w, &x, &y, &g);

        let scalar = |w: &[f64], b: &[f64], x: &[f64]| -> f64 {
            spec.forward(w, b, x).iter().zip(&g).map(|(yi, gi)| yi * gi).sum()
        };
        let h = 1e-6;
        for i in 0..w.len() {
            let mut hi = w.clone();
            let mut lo = w.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (scalar(&hi, &b, &x) - scalar(&lo, &b, &x)) / (2.0 * h);
            assert_abs_diff_eq!(gw[i], fd, epsilon = 1e-8);
        }
        for i in 0..b.len() {
            let mut hi = b.clone();
            let mut lo = b.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (scalar(&w, &hi, &x) - scalar(&w, &lo, &x)) / (2.0 * h);
            assert_abs_diff_eq!(gb[i], fd, epsilon = 1e-8);
        }
        for i in 0..x.len() {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[i] += h;
            lo[i] -= h;
            let fd = (scalar(&w, &b, &hi) - scalar(&w, &b, &lo)) / (2.0 * h);
            assert_abs_diff_eq!(gx[i], fd, epsilon = 1e-8);
        }
    }
}
