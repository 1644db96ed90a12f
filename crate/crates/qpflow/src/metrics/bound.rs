//! Parameter-count capacity estimate and the VC-style generalization bound.
//!
//! The capacity of the hybrid is estimated by adding the classical and
//! quantum parameter counts, h = P_classical + P_quantum, read off the
//! model's parameter index map. The bound on the true risk is then
//!
//! ```text
//! R(f) ≤ R̂(f) + √( (h·(ln(n/h) + 1) + ln(1/δ)) / n )
//! ```
//!
//! valid only for n > h; smaller n is rejected rather than silently fed
//! through the logarithm. This is a classification-style bound applied to a
//! regression loss, reported as-is without asserting tightness.

use super::MetricsError;
use crate::model::Model;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenBoundResult {
    pub h: usize,
    pub n: usize,
    pub delta: f64,
    pub empirical_risk: f64,
    pub complexity_term: f64,
    pub bound: f64,
}

/// Capacity estimate: the total trainable parameter count.
pub fn vc_dim_estimate(model: &Model) -> usize {
    model.layout.len()
}

/// Evaluates the bound at confidence 1−δ from n samples.
pub fn gen_error_bound(
    h: usize,
    n: usize,
    delta: f64,
    empirical_risk: f64,
) -> Result<GenBoundResult, MetricsError> {
    if h == 0 {
        return Err(MetricsError::BadConfig(
            "capacity estimate h must be at least 1".into(),
        ));
    }
    if n <= h {
        return Err(MetricsError::BadConfig(format!(
            "bound requires n > h, got n = {n} with h = {h}"
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(MetricsError::BadConfig(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    if !empirical_risk.is_finite() || empirical_risk < 0.0 {
        return Err(MetricsError::BadConfig(format!(
            "empirical risk must be finite and nonnegative, got {empirical_risk}"
        )));
    }
    let (hf, nf) = (h as f64, n as f64);
    let complexity_term = ((hf * ((nf / hf).ln() + 1.0) + (1.0 / delta).ln()) / nf).sqrt();
    Ok(GenBoundResult {
        h,
        n,
        delta,
        empirical_risk,
        complexity_term,
        bound: empirical_risk + complexity_term,
    })
}
