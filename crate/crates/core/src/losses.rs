//! Training objectives shared by all model families: cross-entropy and the
//! Average Expected Cost (AEC), with first and second derivatives in the raw
//! margin. AEC is the probability-weighted misclassification cost of an
//! instance under its own cost matrix, with zero cost on the diagonal.

use serde::{Deserialize, Serialize};

use crate::costs::CostSet;
use crate::{Error, Result};

/// Which objective a trainer minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Aec,
}

impl LossKind {
    pub fn is_cost_sensitive(self) -> bool {
        matches!(self, LossKind::Aec)
    }
}

/// Hessian floor for trainers that need positive curvature.
pub const HESSIAN_FLOOR: f64 = 1e-6;

const CLAMP: f64 = 1e-12;

/// Numerically stable logistic function.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Inverse logistic with clamped argument.
pub fn logit(p: f64) -> f64 {
    let p = p.clamp(CLAMP, 1.0 - CLAMP);
    (p / (1.0 - p)).ln()
}

/// Expected cost of one instance: `y (1-s) c_fn + (1-y) s c_fp`.
pub fn aec_instance(y: u8, s: f64, c_fn: f64, c_fp: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&s));
    if y == 1 {
        (1.0 - s) * c_fn
    } else {
        s * c_fp
    }
}

/// Gradient and raw hessian of the instance AEC in the margin `z`, with
/// `s = logistic(z)`. The hessian changes sign at `s = 0.5`; callers that
/// need positive curvature should pass it through [`floor_hessian`].
pub fn aec_grad_hess(y: u8, z: f64, c_fn: f64, c_fp: f64) -> (f64, f64) {
    let s = logistic(z);
    let w = if y == 1 { -c_fn } else { c_fp };
    let g = w * s * (1.0 - s);
    let h = w * s * (1.0 - s) * (1.0 - 2.0 * s);
    (g, h)
}

/// Gradient and hessian of per-instance cross-entropy in the margin.
pub fn ce_grad_hess(y: u8, z: f64) -> (f64, f64) {
    let s = logistic(z);
    (s - f64::from(y), s * (1.0 - s))
}

/// Cross-entropy of one instance with clamped probabilities.
pub fn ce_instance(y: u8, s: f64) -> f64 {
    let s = s.clamp(CLAMP, 1.0 - CLAMP);
    if y == 1 {
        -s.ln()
    } else {
        -(1.0 - s).ln()
    }
}

/// Positive-curvature surrogate: `max(|h|, floor)`.
pub fn floor_hessian(h: f64) -> f64 {
    h.abs().max(HESSIAN_FLOOR)
}

/// Mean AEC over a score vector.
pub fn mean_aec(y: &[u8], s: &[f64], costs: &CostSet) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Undefined("mean_aec of empty input".into()));
    }
    if y.len() != s.len() || y.len() != costs.len() {
        return Err(Error::Validation("mean_aec length mismatch".into()));
    }
    let total: f64 = (0..y.len())
        .map(|i| aec_instance(y[i], s[i], costs.c_fn[i], costs.c_fp[i]))
        .sum();
    Ok(total / y.len() as f64)
}

/// Mean cross-entropy over a score vector.
pub fn mean_ce(y: &[u8], s: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Undefined("mean_ce of empty input".into()));
    }
    let total: f64 = (0..y.len()).map(|i| ce_instance(y[i], s[i])).sum();
    Ok(total / y.len() as f64)
}
