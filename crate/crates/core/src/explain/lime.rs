//! LIME for tabular data: perturb the instance, weight perturbations by an
//! exponential kernel on their standardized Euclidean distance, and fit a
//! weighted ridge regression of model scores on the perturbed features.
//! Ridge coefficients are the attributions.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Explanation, Method, Scorer};
use crate::data::TrainSummary;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_samples: usize,
    /// Kernel width in standardized units; `None` means `0.75 * sqrt(D)`.
    pub kernel_width: Option<f64>,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig { n_samples: 5000, kernel_width: None, ridge: 1.0, seed: 0 }
    }
}

/// Weighted ridge fit with unpenalized intercept. Returns
/// (intercept, coefficients, weighted R^2).
fn weighted_ridge(
    z: &Array2<f64>,
    y: &[f64],
    w: &[f64],
    alpha: f64,
) -> Option<(f64, Vec<f64>, f64)> {
    let n = z.nrows();
    let d = z.ncols();
    let p = d + 1; // intercept first
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for i in 0..n {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        // row = [1, z_i]
        xtx[(0, 0)] += wi;
        xty[0] += wi * y[i];
        for a in 0..d {
            let za = z[[i, a]];
            xtx[(0, a + 1)] += wi * za;
            xtx[(a + 1, 0)] += wi * za;
            xty[a + 1] += wi * za * y[i];
            for b in a..d {
                let v = wi * za * z[[i, b]];
                xtx[(a + 1, b + 1)] += v;
                if a != b {
                    xtx[(b + 1, a + 1)] += v;
                }
            }
        }
    }
    for a in 1..p {
        xtx[(a, a)] += alpha;
    }
    let chol = xtx.cholesky()?;
    let beta = chol.solve(&xty);

    let w_sum: f64 = w.iter().sum();
    if w_sum <= 0.0 {
        return None;
    }
    let y_bar = y.iter().zip(w).map(|(yi, wi)| yi * wi).sum::<f64>() / w_sum;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        let mut pred = beta[0];
        for a in 0..d {
            pred += beta[a + 1] * z[[i, a]];
        }
        ss_res += w[i] * (y[i] - pred).powi(2);
        ss_tot += w[i] * (y[i] - y_bar).powi(2);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 0.0 };
    Some((beta[0], beta.as_slice()[1..].to_vec(), r2))
}

pub fn lime_explain(
    model: &dyn Scorer,
    summary: &TrainSummary,
    x: ArrayView1<'_, f64>,
    instance: usize,
    cfg: &LimeConfig,
) -> Result<Explanation> {
    let d = x.len();
    if summary.means.len() != d {
        return Err(Error::Schema("train summary width does not match instance".into()));
    }
    let kw = cfg.kernel_width.unwrap_or(0.75 * (d as f64).sqrt());
    let mut r = rng::rng(rng::derive(cfg.seed, &["lime"]));

    let mut z = Array2::<f64>::zeros((cfg.n_samples, d));
    let mut dist2 = vec![0.0f64; cfg.n_samples];
    for i in 0..cfg.n_samples {
        // numeric columns: gaussian around x in standardized units
        for &j in &summary.numeric_cols {
            let eps: f64 = StandardNormal.sample(&mut r);
            z[[i, j]] = x[j] + eps * summary.sds[j];
            dist2[i] += eps * eps;
        }
        // categorical blocks: resample a level by training frequency
        for (cols, freqs) in &summary.cat_blocks {
            let total: f64 = freqs.iter().sum();
            let mut pick = r.gen_range(0.0..total.max(1e-12));
            let mut chosen = cols.len() - 1;
            for (k, &fr) in freqs.iter().enumerate() {
                if pick < fr {
                    chosen = k;
                    break;
                }
                pick -= fr;
            }
            let mut same = true;
            for (k, &j) in cols.iter().enumerate() {
                let v = if k == chosen { 1.0 } else { 0.0 };
                z[[i, j]] = v;
                if (v - x[j]).abs() > 0.5 {
                    same = false;
                }
            }
            if !same {
                dist2[i] += 1.0;
            }
        }
    }

    let scores: Vec<f64> = (0..cfg.n_samples).map(|i| model.score_one(z.row(i))).collect();
    let weights: Vec<f64> = dist2.iter().map(|&d2| (-d2 / (kw * kw)).exp()).collect();

    let fit = weighted_ridge(&z, &scores, &weights, cfg.ridge).or_else(|| {
        // singular system: stiffen the ridge once and retry
        weighted_ridge(&z, &scores, &weights, (cfg.ridge * 10.0).max(1e-6))
    });
    let Some((_, coefs, r2)) = fit else {
        return Err(Error::Numeric("LIME ridge system is singular".into()));
    };

    Ok(Explanation {
        instance,
        method: Method::Lime,
        values: coefs,
        base_value: None,
        local_r2: Some(r2),
    })
}
