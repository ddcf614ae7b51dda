//! Model-agnostic post-hoc explanations: permutation SHAP and LIME. Both
//! operate on probability outputs through the [`Scorer`] trait, so the same
//! code path serves every model family.

mod lime;
mod shap;

pub use lime::{lime_explain, LimeConfig};
pub use shap::{shap_permutation, ShapConfig};

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::models::TrainedModel;

/// Anything that can score a single feature row.
pub trait Scorer: Sync {
    fn score_one(&self, x: ArrayView1<'_, f64>) -> f64;
}

impl Scorer for TrainedModel {
    fn score_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.predict_one(x)
    }
}

impl<F> Scorer for F
where
    F: Fn(ArrayView1<'_, f64>) -> f64 + Sync,
{
    fn score_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shap,
    Lime,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Shap => "shap",
            Method::Lime => "lime",
        }
    }
}

/// Per-instance feature attribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Explanation {
    pub instance: usize,
    pub method: Method,
    /// Signed per-feature attribution; importance for ranking is `|value|`.
    pub values: Vec<f64>,
    /// Expected score over the background set (SHAP only).
    pub base_value: Option<f64>,
    /// Goodness of the weighted local fit (LIME only).
    pub local_r2: Option<f64>,
}

/// Feature ranking from attribution magnitudes: rank 1 is the largest
/// `|value|`; ties break toward the lower feature index.
pub fn rank_features(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0usize; values.len()];
    for (pos, &i) in idx.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Settings for both explainers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplainerConfig {
    pub shap: ShapConfig,
    pub lime: LimeConfig,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        ExplainerConfig { shap: ShapConfig::default(), lime: LimeConfig::default() }
    }
}
