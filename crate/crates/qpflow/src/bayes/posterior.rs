//! Mean-field Gaussian posterior with a softplus-parameterized scale.
//!
//! Each parameter gets an independent N(μ_i, σ_i²) with σ = softplus(ρ) =
//! ln(1 + e^ρ), so ρ is optimized unconstrained while σ stays positive.
//! Draws use the reparameterization θ = μ + σ ⊙ ε with ε ~ N(0, 1), which
//! makes ∂θ/∂μ = 1 and ∂θ/∂ρ = ε · sigmoid(ρ) available to the ELBO
//! gradient.

use crate::model::FlatParams;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Zero-mean isotropic Gaussian prior with one shared std.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub std: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec { std: 1.0 }
    }
}

/// Numerically stable ln(1 + e^x).
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for y > 0.
pub fn softplus_inv(y: f64) -> f64 {
    if y > 20.0 {
        // e^y - 1 == e^y at double precision
        y
    } else {
        y.exp_m1().ln()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// The variational parameters (μ, ρ) of the factorized Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalPosterior {
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl VariationalPosterior {
    /// Centers the posterior on an initial point with uniform scale σ0.
    pub fn from_init(mu: FlatParams, sigma0: f64) -> Self {
        let rho = vec![softplus_inv(sigma0); mu.len()];
        VariationalPosterior {
            mu: mu.values,
            rho,
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.rho.iter().map(|&r| softplus(r)).collect()
    }

    /// One standard-normal vector of the posterior's dimension.
    pub fn draw_eps<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.len()).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// θ = μ + σ ⊙ ε.
    pub fn apply_eps(&self, eps: &[f64]) -> FlatParams {
        let values = self
            .mu
            .iter()
            .zip(&self.rho)
            .zip(eps)
            .map(|((m, r), e)| m + softplus(*r) * e)
            .collect();
        FlatParams { values }
    }

    /// As [`Self::apply_eps`], but components outside the mask collapse to μ.
    pub(crate) fn apply_eps_masked(&self, eps: &[f64], mask: &[bool]) -> FlatParams {
        let values = self
            .mu
            .iter()
            .zip(&self.rho)
            .zip(eps.iter().zip(mask))
            .map(|((m, r), (e, &on))| if on { m + softplus(*r) * e } else { *m })
            .collect();
        FlatParams { values }
    }

    /// A reparameterized draw from the posterior.
    pub fn sample_params<R: Rng + ?Sized>(&self, rng: &mut R) -> FlatParams {
        let eps = self.draw_eps(rng);
        self.apply_eps(&eps)
    }
}
