//! Empirical Fisher information from log-likelihood gradients.
//!
//! Under the Gaussian likelihood the per-sample score is
//! `g_i = Jᵀ(y_i − f_θ(x_i)) / σ²`, obtained here as a single
//! vector-Jacobian product, and the estimate averages the outer products:
//!
//! ```text
//! F̂_n(θ) = (1/n) Σ_i g_i g_iᵀ
//! ```
//!
//! Being a mean of outer products the exact matrix is symmetric positive
//! semidefinite; the accessor clamps the eigensolver's tiny negative noise.

use super::MetricsError;
use crate::model::{Differentiable, FlatParams, NormPair};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// `d×d` empirical Fisher matrix with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherEstimate {
    /// Row-major symmetric matrix, `matrix[i][j] = F̂_ij`.
    pub matrix: Vec<Vec<f64>>,
    pub sample_count: usize,
    pub sigma_obs: f64,
}

impl FisherEstimate {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    /// Symmetrized view as a dense matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| 0.5 * (self.matrix[i][j] + self.matrix[j][i]))
    }

    /// Eigenvalues of the symmetrized matrix, ascending, with negative
    /// round-off (magnitude below 1e-8) clamped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eig: Vec<f64> = self
            .to_matrix()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|&l| if l < 0.0 && l > -1e-8 { 0.0 } else { l })
            .collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eig
    }
}

/// Estimates the Fisher information at `params` from observed data.
pub fn empirical_fisher<M: Differentiable + Sync>(
    model: &M,
    params: &FlatParams,
    data: &[NormPair],
    sigma_obs: f64,
) -> Result<FisherEstimate, MetricsError> {
    if data.is_empty() {
        return Err(MetricsError::EmptyData);
    }
    if !(sigma_obs > 0.0) {
        return Err(MetricsError::BadConfig(format!(
            "sigma_obs must be positive, got {sigma_obs}"
        )));
    }
    let inv_var = 1.0 / (sigma_obs * sigma_obs);
    let scores: Result<Vec<Vec<f64>>, MetricsError> = data
        .par_iter()
        .map(|(x, t)| {
            let out = model.output(params, x, None)?;
            let cot: Vec<f64> = out.iter().zip(t).map(|(o, ti)| (ti - o) * inv_var).collect();
            Ok(model.vjp(params, x, None, &cot)?)
        })
        .collect();
    let scores = scores?;

    let d = model.param_count();
    let inv_n = 1.0 / data.len() as f64;
    let mut matrix = vec![vec![0.0; d]; d];
    for g in &scores {
        for i in 0..d {
            let gi = g[i] * inv_n;
            for j in 0..d {
                matrix[i][j] += gi * g[j];
            }
        }
    }
    Ok(FisherEstimate {
        matrix,
        sample_count: data.len(),
        sigma_obs,
    })
}
