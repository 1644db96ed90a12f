//! Evidence lower bound: Gaussian log-likelihood, closed-form KL, and the
//! reparameterized Monte Carlo estimate with gradients.
//!
//! For a batch of normalized pairs and observation scale σ,
//!
//! ```text
//! log p(D | θ) = Σ_i [ −(k/2)·ln(2πσ²) − ‖y_i − f_θ(x_i)‖² / (2σ²) ]
//! ELBO         = (1/M) Σ_k log p(D | θ^(k)) − KL[q ‖ p],  θ^(k) = μ + σ_q ⊙ ε_k
//! ```
//!
//! Gradients reach μ directly and ρ through ε ⊙ sigmoid(ρ); the KL between
//! diagonal Gaussians and its gradients are closed-form. Everything here is
//! deterministic given the ε draws, which is what the common-random-numbers
//! finite-difference check relies on.

use super::posterior::{sigmoid, PriorSpec, VariationalPosterior};
use super::BayesError;
use crate::model::{Differentiable, FlatParams, NormPair};
use crate::quantum::NoiseSpec;
use rayon::prelude::*;
use std::f64::consts::PI;

/// ELBO gradient with respect to the variational parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ElboGrad {
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

/// The estimate and its two additive pieces (`elbo = log_lik − kl`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboParts {
    pub elbo: f64,
    pub kl: f64,
    /// MC mean of the batch log-likelihood over the posterior draws.
    pub log_lik: f64,
}

fn check_sigma_obs(sigma_obs: f64) -> Result<(), BayesError> {
    if !(sigma_obs > 0.0) {
        return Err(BayesError::BadSigmaObs(sigma_obs));
    }
    Ok(())
}

fn check_prior(prior: &PriorSpec) -> Result<(), BayesError> {
    if !(prior.std > 0.0) {
        return Err(BayesError::BadPrior(prior.std));
    }
    Ok(())
}

/// Batch Gaussian log-likelihood at a fixed parameter vector.
pub fn log_likelihood<M: Differentiable + Sync>(
    model: &M,
    params: &FlatParams,
    batch: &[NormPair],
    sigma_obs: f64,
    noise: Option<&NoiseSpec>,
) -> Result<f64, BayesError> {
    check_sigma_obs(sigma_obs)?;
    let k = model.output_dim() as f64;
    let norm_const = -0.5 * k * (2.0 * PI * sigma_obs * sigma_obs).ln();
    let per: Result<Vec<f64>, BayesError> = batch
        .par_iter()
        .map(|(x, t)| {
            let out = model.output(params, x, noise)?;
            let sq: f64 = out.iter().zip(t).map(|(o, ti)| (ti - o).powi(2)).sum();
            Ok(norm_const - sq / (2.0 * sigma_obs * sigma_obs))
        })
        .collect();
    Ok(per?.iter().sum())
}

/// Log-likelihood together with its parameter gradient
/// `Σ_i Jᵀ (y_i − f(x_i)) / σ²`.
pub(crate) fn log_lik_with_grad<M: Differentiable + Sync>(
    model: &M,
    params: &FlatParams,
    batch: &[NormPair],
    sigma_obs: f64,
    noise: Option<&NoiseSpec>,
) -> Result<(f64, Vec<f64>), BayesError> {
    check_sigma_obs(sigma_obs)?;
    let k = model.output_dim() as f64;
    let inv_var = 1.0 / (sigma_obs * sigma_obs);
    let norm_const = -0.5 * k * (2.0 * PI * sigma_obs * sigma_obs).ln();
    let per: Result<Vec<(f64, Vec<f64>)>, BayesError> = batch
        .par_iter()
        .map(|(x, t)| {
            let out = model.output(params, x, noise)?;
            let sq: f64 = out.iter().zip(t).map(|(o, ti)| (ti - o).powi(2)).sum();
            let cot: Vec<f64> = out.iter().zip(t).map(|(o, ti)| (ti - o) * inv_var).collect();
            let g = model.vjp(params, x, noise, &cot)?;
            Ok((norm_const - 0.5 * sq * inv_var, g))
        })
        .collect();
    let per = per?;
    let mut ll = 0.0;
    let mut grad = vec![0.0; model.param_count()];
    for (l, g) in &per {
        ll += l;
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    Ok((ll, grad))
}

/// Closed-form KL between the factorized posterior and the isotropic prior:
/// `Σ_i [ ln(σ_p/σ_i) + (σ_i² + μ_i²)/(2σ_p²) − 1/2 ]`.
pub fn kl_gaussian(post: &VariationalPosterior, prior: &PriorSpec) -> f64 {
    kl_masked(post, prior, None)
}

pub(crate) fn kl_masked(
    post: &VariationalPosterior,
    prior: &PriorSpec,
    mask: Option<&[bool]>,
) -> f64 {
    let sp2 = prior.std * prior.std;
    post.mu
        .iter()
        .zip(post.sigma())
        .enumerate()
        .filter(|(i, _)| mask.map_or(true, |m| m[*i]))
        .map(|(_, (m, s))| (prior.std / s).ln() + (s * s + m * m) / (2.0 * sp2) - 0.5)
        .sum()
}

/// The deterministic ELBO given frozen ε draws (one per MC sample).
///
/// This is the function the optimizer actually ascends; [`elbo`] only adds
/// the draws. Exposing it keeps the gradient checkable by common-random-
/// numbers finite differences.
pub fn elbo_with_eps<M: Differentiable + Sync>(
    post: &VariationalPosterior,
    model: &M,
    batch: &[NormPair],
    eps_draws: &[Vec<f64>],
    prior: &PriorSpec,
    sigma_obs: f64,
    noise: Option<&NoiseSpec>,
) -> Result<(ElboParts, ElboGrad), BayesError> {
    elbo_masked(post, model, batch, eps_draws, prior, sigma_obs, noise, None)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn elbo_masked<M: Differentiable + Sync>(
    post: &VariationalPosterior,
    model: &M,
    batch: &[NormPair],
    eps_draws: &[Vec<f64>],
    prior: &PriorSpec,
    sigma_obs: f64,
    noise: Option<&NoiseSpec>,
    mask: Option<&[bool]>,
) -> Result<(ElboParts, ElboGrad), BayesError> {
    check_prior(prior)?;
    check_sigma_obs(sigma_obs)?;
    if eps_draws.is_empty() {
        return Err(BayesError::BadSampleCount);
    }
    let d = model.param_count();
    if post.len() != d {
        return Err(BayesError::DimMismatch {
            got: post.len(),
            expected: d,
        });
    }

    let sigma = post.sigma();
    let inv_m = 1.0 / eps_draws.len() as f64;
    let mut ll_mean = 0.0;
    let mut g_mu = vec![0.0; d];
    let mut g_rho = vec![0.0; d];
    for eps in eps_draws {
        let theta = match mask {
            Some(m) => post.apply_eps_masked(eps, m),
            None => post.apply_eps(eps),
        };
        let (ll, g_theta) = log_lik_with_grad(model, &theta, batch, sigma_obs, noise)?;
        ll_mean += ll * inv_m;
        for i in 0..d {
            if mask.map_or(true, |m| m[i]) {
                g_mu[i] += g_theta[i] * inv_m;
                g_rho[i] += g_theta[i] * eps[i] * sigmoid(post.rho[i]) * inv_m;
            }
        }
    }

    let kl = kl_masked(post, prior, mask);
    let sp2 = prior.std * prior.std;
    for i in 0..d {
        if mask.map_or(true, |m| m[i]) {
            g_mu[i] -= post.mu[i] / sp2;
            g_rho[i] -= (sigma[i] / sp2 - 1.0 / sigma[i]) * sigmoid(post.rho[i]);
        }
    }

    let parts = ElboParts {
        elbo: ll_mean - kl,
        kl,
        log_lik: ll_mean,
    };
    if !parts.elbo.is_finite() {
        return Err(BayesError::NonFinite);
    }
    Ok((parts, ElboGrad { mu: g_mu, rho: g_rho }))
}

/// MC ELBO estimate with fresh draws from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn elbo<M: Differentiable + Sync, R: rand::Rng + ?Sized>(
    post: &VariationalPosterior,
    model: &M,
    batch: &[NormPair],
    mc_samples: usize,
    prior: &PriorSpec,
    sigma_obs: f64,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<(ElboParts, ElboGrad), BayesError> {
    if mc_samples == 0 {
        return Err(BayesError::BadSampleCount);
    }
    let eps: Vec<Vec<f64>> = (0..mc_samples).map(|_| post.draw_eps(rng)).collect();
    elbo_with_eps(post, model, batch, &eps, prior, sigma_obs, noise)
}
