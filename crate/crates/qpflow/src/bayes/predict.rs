//! Posterior predictive ensembles.
//!
//! Drawing S parameter vectors from the fitted posterior and pushing each
//! through the model turns weight uncertainty into a per-output predictive
//! spread. Members, mean, and spread are all reported in physical units
//! (denormalized), which is what downstream accuracy checks consume.

use super::posterior::VariationalPosterior;
use super::BayesError;
use crate::model::{Differentiable, Model, ModelError, Prediction};
use crate::quantum::NoiseSpec;
use rand::Rng;
use rayon::prelude::*;

/// S forward passes at posterior draws, with their pointwise statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveEnsemble {
    pub members: Vec<Prediction>,
    pub mean: Prediction,
    /// Population standard deviation per output, laid out `[v; φ; pf; qf]`.
    pub std: Vec<f64>,
}

/// Componentwise mean and population std over equal-length rows.
pub(crate) fn mean_std(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let k = rows[0].len();
    let mut mean = vec![0.0; k];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; k];
    for row in rows {
        for (s, (v, m)) in var.iter_mut().zip(row.iter().zip(&mean)) {
            *s += (v - m).powi(2) / n;
        }
    }
    (mean, var.into_iter().map(f64::sqrt).collect())
}

/// Predicts at one raw input by averaging `draws` posterior samples.
///
/// Draws are taken from `rng` up front in a fixed order, so results are
/// reproducible for a seeded generator regardless of evaluation parallelism.
pub fn predict_bayes<R: Rng + ?Sized>(
    model: &Model,
    post: &VariationalPosterior,
    input: &[f64],
    draws: usize,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<PredictiveEnsemble, BayesError> {
    if draws == 0 {
        return Err(BayesError::BadSampleCount);
    }
    if post.len() != model.param_count() {
        return Err(BayesError::DimMismatch {
            got: post.len(),
            expected: model.param_count(),
        });
    }
    if input.len() != model.input_dim() {
        return Err(BayesError::Model(ModelError::InputLength {
            got: input.len(),
            expected: model.input_dim(),
        }));
    }
    let x = model.norms.normalize_input(input);
    let eps: Vec<Vec<f64>> = (0..draws).map(|_| post.draw_eps(rng)).collect();
    let flats: Result<Vec<Vec<f64>>, BayesError> = eps
        .par_iter()
        .map(|e| {
            let theta = post.apply_eps(e);
            let out = model.output(&theta, &x, noise)?;
            Ok(model.norms.denormalize_target(&out))
        })
        .collect();
    let flats = flats?;
    let (mean, std) = mean_std(&flats);
    let (n, nb) = (model.n_bus(), model.n_branch());
    Ok(PredictiveEnsemble {
        members: flats
            .iter()
            .map(|f| Prediction::from_flat(f, n, nb))
            .collect(),
        mean: Prediction::from_flat(&mean, n, nb),
        std,
    })
}
