//! Accuracy tables over physical-unit predictions.
//!
//! Predictions and targets are flat `[v; φ; pf; qf]` vectors in per-unit,
//! radians, and per-unit flows. Three summary numbers:
//!
//! * `v_mse`: mean squared voltage error ×10³ (so typical values land near 1),
//! * `phi_dev`: fraction of all (sample, bus) angle errors above 0.05 rad,
//! * `p_dev`: fraction of all (sample, branch) active-flow errors above
//!   5 MW once converted through the case MVA base.
//!
//! `epochs_to_target` replays a training run epoch by epoch and reports the
//! first epoch whose test report clears both deviation thresholds.

use super::{MetricsError, PHI_TOL_RAD, P_TOL_MW};
use crate::powerflow::{PowerCase, Sample};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Voltage MSE ×10³ on per-unit magnitudes.
    pub v_mse: f64,
    /// Fraction of per-bus angle errors above 0.05 rad.
    pub phi_dev: f64,
    /// Fraction of per-branch active-flow errors above 5 MW.
    pub p_dev: f64,
}

impl AccuracyReport {
    /// True when both deviation fractions are at or below the given caps.
    pub fn meets(&self, phi_cap: f64, p_cap: f64) -> bool {
        self.phi_dev <= phi_cap && self.p_dev <= p_cap
    }
}

/// Evaluates a predictor of raw inputs against raw targets.
pub fn accuracy_report<F>(
    predict: F,
    data: &[Sample],
    case: &PowerCase,
) -> Result<AccuracyReport, MetricsError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, MetricsError> + Sync,
{
    if data.is_empty() {
        return Err(MetricsError::EmptyData);
    }
    let (n, nb) = (case.n_bus(), case.n_branch());
    let dim = 2 * n + 2 * nb;
    let preds: Result<Vec<Vec<f64>>, MetricsError> = data
        .par_iter()
        .map(|s| {
            let p = predict(&s.input)?;
            if p.len() != dim || s.target.len() != dim {
                return Err(MetricsError::PredictionLength {
                    got: if p.len() != dim { p.len() } else { s.target.len() },
                    expected: dim,
                });
            }
            Ok(p)
        })
        .collect();
    let preds = preds?;

    let mut v_sq = 0.0;
    let mut phi_over = 0usize;
    let mut p_over = 0usize;
    for (s, p) in data.iter().zip(&preds) {
        for i in 0..n {
            v_sq += (p[i] - s.target[i]).powi(2);
            if (p[n + i] - s.target[n + i]).abs() > PHI_TOL_RAD {
                phi_over += 1;
            }
        }
        for j in 0..nb {
            let err_mw = (p[2 * n + j] - s.target[2 * n + j]).abs() * case.base_mva;
            if err_mw > P_TOL_MW {
                p_over += 1;
            }
        }
    }
    Ok(AccuracyReport {
        v_mse: 1e3 * v_sq / (data.len() * n) as f64,
        phi_dev: phi_over as f64 / (data.len() * n) as f64,
        p_dev: p_over as f64 / (data.len() * nb) as f64,
    })
}

/// Mean squared prediction error `(1/n) Σ ‖f(x_i) − y_i‖²` over (input,
/// target) pairs; units follow the caller's pairs.
pub fn empirical_risk<F>(predict: F, data: &[(Vec<f64>, Vec<f64>)]) -> Result<f64, MetricsError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, MetricsError> + Sync,
{
    if data.is_empty() {
        return Err(MetricsError::EmptyData);
    }
    let sq: Result<Vec<f64>, MetricsError> = data
        .par_iter()
        .map(|(x, t)| {
            let p = predict(x)?;
            if p.len() != t.len() {
                return Err(MetricsError::PredictionLength {
                    got: p.len(),
                    expected: t.len(),
                });
            }
            Ok(p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum())
        })
        .collect();
    Ok(sq?.iter().sum::<f64>() / data.len() as f64)
}

/// First epoch (1-based) whose report clears both caps, or `None` within
/// `max_epochs`. The closure advances the run and evaluates the test set at
/// the requested epoch; it is called with 1, 2, … in order.
pub fn epochs_to_target(
    mut report_at: impl FnMut(usize) -> Result<AccuracyReport, MetricsError>,
    phi_cap: f64,
    p_cap: f64,
    max_epochs: usize,
) -> Result<Option<usize>, MetricsError> {
    if max_epochs == 0 {
        return Err(MetricsError::BadConfig(
            "epochs_to_target needs max_epochs >= 1".into(),
        ));
    }
    for epoch in 1..=max_epochs {
        if report_at(epoch)?.meets(phi_cap, p_cap) {
            return Ok(Some(epoch));
        }
    }
    Ok(None)
}
