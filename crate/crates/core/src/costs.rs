//! Per-instance misclassification cost matrices for credit scoring.
//!
//! A false negative (granting a loan to a defaulter) costs `A_i * LGD`; a
//! false positive (refusing a good customer) costs the lost revenue `r_i`
//! plus the expected cost `C_alt` of lending to the average alternative
//! customer. Correct classifications cost zero.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Result};

/// Loss-given-default fraction used throughout.
pub const DEFAULT_LGD: f64 = 0.75;

/// Global cost parameters, fitted on training data only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub lgd: f64,
    pub pi0: f64,
    pub pi1: f64,
    pub a_bar: f64,
    pub r_bar: f64,
    /// Expected cost of the alternative customer:
    /// `-r_bar * pi0 + a_bar * lgd * pi1`.
    pub c_alt: f64,
}

/// Per-row misclassification costs; the diagonal is zero by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostSet {
    /// Cost of predicting no-default for an actual defaulter: `A_i * LGD`.
    pub c_fn: Vec<f64>,
    /// Cost of predicting default for a good customer: `r_i + C_alt`,
    /// floored at zero.
    pub c_fp: Vec<f64>,
    /// Number of rows whose raw false-positive cost was negative and floored.
    pub floored: usize,
}

impl CostSet {
    pub fn len(&self) -> usize {
        self.c_fn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_fn.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> CostSet {
        CostSet {
            c_fn: idx.iter().map(|&i| self.c_fn[i]).collect(),
            c_fp: idx.iter().map(|&i| self.c_fp[i]).collect(),
            floored: 0,
        }
    }

    /// Uniform unit costs, handy for reducing AEC to a CE-like objective.
    pub fn uniform(n: usize) -> CostSet {
        CostSet { c_fn: vec![1.0; n], c_fp: vec![1.0; n], floored: 0 }
    }
}

/// Fit the global cost parameters on a training split.
///
/// `priors` overrides the empirical class rates; the stability experiment
/// pins them to the original dataset rates so `C_alt` does not drift with
/// the resampled default rate.
pub fn fit_cost_params(
    train: &Dataset,
    lgd: f64,
    priors: Option<(f64, f64)>,
) -> Result<CostParams> {
    if train.n_rows() == 0 {
        return Err(Error::Validation("empty training set".into()));
    }
    if !(lgd > 0.0 && lgd <= 1.0) {
        return Err(Error::Validation(format!("LGD must be in (0,1], got {lgd}")));
    }
    let n = train.n_rows() as f64;
    let a_bar = train.amount.iter().sum::<f64>() / n;
    let r_bar = train.revenue.iter().sum::<f64>() / n;
    let (pi0, pi1) = match priors {
        Some((p0, p1)) => {
            if (p0 + p1 - 1.0).abs() > 1e-9 || !(p1 > 0.0 && p1 < 1.0) {
                return Err(Error::Validation(format!("invalid priors ({p0}, {p1})")));
            }
            (p0, p1)
        }
        None => {
            let p1 = train.pos_rate();
            (1.0 - p1, p1)
        }
    };
    let c_alt = -r_bar * pi0 + a_bar * lgd * pi1;
    Ok(CostParams { lgd, pi0, pi1, a_bar, r_bar, c_alt })
}

/// Build the per-row cost set for a dataset under fitted parameters.
pub fn build_cost_set(d: &Dataset, params: &CostParams) -> CostSet {
    let mut c_fn = Vec::with_capacity(d.n_rows());
    let mut c_fp = Vec::with_capacity(d.n_rows());
    let mut floored = 0usize;
    for i in 0..d.n_rows() {
        c_fn.push(d.amount[i] * params.lgd);
        let raw = d.revenue[i] + params.c_alt;
        if raw < 0.0 {
            floored += 1;
            c_fp.push(0.0);
        } else {
            c_fp.push(raw);
        }
    }
    CostSet { c_fn, c_fp, floored }
}

/// Histogram of the per-defaulter FN/FP cost ratio. Rows with `c_fp = 0`
/// land in the trailing overflow bucket.
pub fn cost_ratio_histogram(y: &[u8], costs: &CostSet, edges: &[f64]) -> Vec<(String, f64)> {
    assert!(!edges.is_empty());
    let mut counts = vec![0usize; edges.len() + 1];
    let mut total = 0usize;
    for i in 0..y.len() {
        if y[i] != 1 {
            continue;
        }
        total += 1;
        if costs.c_fp[i] <= 0.0 {
            counts[edges.len()] += 1;
            continue;
        }
        let ratio = costs.c_fn[i] / costs.c_fp[i];
        let bucket = edges.iter().position(|&e| ratio <= e).unwrap_or(edges.len());
        counts[bucket] += 1;
    }
    let denom = total.max(1) as f64;
    let mut out = Vec::new();
    let mut lo = 0.0;
    for (b, &e) in edges.iter().enumerate() {
        out.push((format!("({lo:.2}, {e:.2}]"), counts[b] as f64 / denom));
        lo = e;
    }
    out.push((format!("({lo:.2}, inf)"), counts[edges.len()] as f64 / denom));
    out
}
