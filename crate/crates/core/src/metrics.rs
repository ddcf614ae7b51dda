//! Evaluation metrics: AUC, average precision, Brier score, relative AEC,
//! cost savings, and the Friedman rank test with Hommel post-hoc
//! adjustments used for cross-dataset model comparison.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::costs::CostSet;
use crate::losses::mean_aec;
use crate::{Error, Result};

/// Ranking quality as the probability that a random positive scores above a
/// random negative; ties count half.
pub fn auc(y: &[u8], s: &[f64]) -> Result<f64> {
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined("AUC needs both classes".into()));
    }
    // Tie-averaged rank sum (Mann-Whitney U).
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && s[order[j + 1]] == s[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if y[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Area under the precision-recall curve as the mean of precision at each
/// positive hit, scores sorted descending with stable tie order.
pub fn average_precision(y: &[u8], s: &[f64]) -> Result<f64> {
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    if n_pos == 0 {
        return Err(Error::Undefined("AP needs at least one positive".into()));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank0, &idx) in order.iter().enumerate() {
        if y[idx] == 1 {
            hits += 1;
            total += hits as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(total / n_pos as f64)
}

/// Mean squared error between scores and labels.
pub fn brier(y: &[u8], s: &[f64]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    y.iter()
        .zip(s)
        .map(|(&yi, &si)| (si - f64::from(yi)).powi(2))
        .sum::<f64>()
        / y.len() as f64
}

/// AEC normalized against the no-model baseline that predicts the prior
/// default rate everywhere: `1 - AEC(s) / AEC(pi1)`. 1 = perfect, 0 =
/// baseline, negative = worse than baseline.
pub fn rel_aec(y: &[u8], s: &[f64], costs: &CostSet, pi1: f64) -> Result<f64> {
    let model = mean_aec(y, s, costs)?;
    let base_scores = vec![pi1; y.len()];
    let base = mean_aec(y, &base_scores, costs)?;
    if base == 0.0 {
        return Err(Error::Undefined("baseline AEC is zero".into()));
    }
    Ok(1.0 - model / base)
}

/// Cost of the cheaper all-one-class policy:
/// `min(sum c_fn over positives, sum c_fp over negatives)`.
pub fn baseline_cost(y: &[u8], costs: &CostSet) -> f64 {
    let mut all_zero = 0.0; // predict no-default everywhere: pay every FN
    let mut all_one = 0.0; // predict default everywhere: pay every FP
    for i in 0..y.len() {
        if y[i] == 1 {
            all_zero += costs.c_fn[i];
        } else {
            all_one += costs.c_fp[i];
        }
    }
    all_zero.min(all_one)
}

/// Total misclassification cost incurred by hard predictions.
pub fn incurred_cost(y: &[u8], y_hat: &[u8], costs: &CostSet) -> f64 {
    let mut total = 0.0;
    for i in 0..y.len() {
        match (y[i], y_hat[i]) {
            (1, 0) => total += costs.c_fn[i],
            (0, 1) => total += costs.c_fp[i],
            _ => {}
        }
    }
    total
}

/// Cost reduction relative to the cheaper single-class policy:
/// `1 - C_f / C_base`.
pub fn savings(y: &[u8], y_hat: &[u8], costs: &CostSet) -> Result<f64> {
    let base = baseline_cost(y, costs);
    if base <= 0.0 {
        return Err(Error::Undefined("baseline cost is zero".into()));
    }
    Ok(1.0 - incurred_cost(y, y_hat, costs) / base)
}

/// One fold's worth of the five evaluation metrics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub auc: f64,
    pub ap: f64,
    pub brier: f64,
    pub rel_aec: f64,
    pub savings: f64,
}

impl FoldMetrics {
    pub fn values(&self) -> [f64; 5] {
        [self.auc, self.ap, self.brier, self.rel_aec, self.savings]
    }

    pub const NAMES: [&'static str; 5] = ["auc", "ap", "brier", "rel_aec", "savings"];
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

pub fn mean_sd(values: &[f64]) -> MeanSd {
    let n = values.len() as f64;
    if values.is_empty() {
        return MeanSd { mean: f64::NAN, sd: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanSd { mean, sd }
}

/// Per-model metric summary across folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub auc: MeanSd,
    pub ap: MeanSd,
    pub brier: MeanSd,
    pub rel_aec: MeanSd,
    pub savings: MeanSd,
}

impl MetricReport {
    pub fn from_folds(model: impl Into<String>, folds: &[FoldMetrics]) -> Self {
        let col = |f: fn(&FoldMetrics) -> f64| mean_sd(&folds.iter().map(f).collect::<Vec<_>>());
        MetricReport {
            model: model.into(),
            auc: col(|m| m.auc),
            ap: col(|m| m.ap),
            brier: col(|m| m.brier),
            rel_aec: col(|m| m.rel_aec),
            savings: col(|m| m.savings),
        }
    }
}

/// Average ranks with tie averaging; rank 1 is best.
fn column_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let k = values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        if higher_is_better {
            values[b].partial_cmp(&values[a]).unwrap()
        } else {
            values[a].partial_cmp(&values[b]).unwrap()
        }
    });
    let mut ranks = vec![0.0; k];
    let mut i = 0;
    while i < k {
        let mut j = i;
        while j + 1 < k && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Result of the Friedman rank test over a models-by-datasets table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub avg_ranks: Vec<f64>,
    pub chi2: f64,
    pub p_value: f64,
}

/// Friedman test over a table of metric values with shape
/// (models, datasets). Ranks are computed per dataset with ties averaged.
pub fn friedman_and_ranks(
    table: &[Vec<f64>],
    higher_is_better: bool,
) -> Result<FriedmanResult> {
    let k = table.len();
    if k < 2 {
        return Err(Error::Validation("need >= 2 models".into()));
    }
    let n = table[0].len();
    if n < 2 || table.iter().any(|row| row.len() != n) {
        return Err(Error::Validation("need >= 2 datasets with equal counts".into()));
    }
    let mut sum_ranks = vec![0.0; k];
    for d in 0..n {
        let col: Vec<f64> = (0..k).map(|m| table[m][d]).collect();
        for (m, r) in column_ranks(&col, higher_is_better).into_iter().enumerate() {
            sum_ranks[m] += r;
        }
    }
    let avg_ranks: Vec<f64> = sum_ranks.iter().map(|s| s / n as f64).collect();
    let kf = k as f64;
    let nf = n as f64;
    let chi2 = 12.0 * nf / (kf * (kf + 1.0)) * avg_ranks.iter().map(|r| r * r).sum::<f64>()
        - 3.0 * nf * (kf + 1.0);
    let chi2 = chi2.max(0.0);
    let p_value = if chi2 == 0.0 {
        1.0
    } else {
        let dist = ChiSquared::new(kf - 1.0)
            .map_err(|e| Error::Numeric(format!("chi-squared dist: {e}")))?;
        1.0 - dist.cdf(chi2)
    };
    Ok(FriedmanResult { avg_ranks, chi2, p_value })
}

/// Friedman test from an already-ranked table (models x datasets of ranks).
pub fn friedman_from_ranks(ranks: &[Vec<f64>]) -> Result<FriedmanResult> {
    let k = ranks.len();
    if k < 2 || ranks.iter().any(|r| r.len() != ranks[0].len()) {
        return Err(Error::Validation("invalid rank table".into()));
    }
    let n = ranks[0].len() as f64;
    let avg_ranks: Vec<f64> =
        ranks.iter().map(|row| row.iter().sum::<f64>() / n).collect();
    let kf = k as f64;
    let chi2 = (12.0 * n / (kf * (kf + 1.0)) * avg_ranks.iter().map(|r| r * r).sum::<f64>()
        - 3.0 * n * (kf + 1.0))
        .max(0.0);
    let p_value = if chi2 == 0.0 {
        1.0
    } else {
        let dist = ChiSquared::new(kf - 1.0)
            .map_err(|e| Error::Numeric(format!("chi-squared dist: {e}")))?;
        1.0 - dist.cdf(chi2)
    };
    Ok(FriedmanResult { avg_ranks, chi2, p_value })
}

/// Hommel step-up adjustment of a p-value vector (the procedure used in
/// R's `p.adjust`). Returned values are monotone and >= the raw inputs.
pub fn hommel_adjust(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    if n <= 1 {
        return p.to_vec();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| p[i]).collect();

    let init = (0..n)
        .map(|i| n as f64 * sorted[i] / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min);
    let mut q = vec![init; n];
    let mut pa = vec![init; n];
    for m in (2..n).rev() {
        let cut = n - m + 1; // i1 = 0..cut, i2 = cut..n
        let q1 = (cut..n)
            .map(|i| m as f64 * sorted[i] / (i - cut + 2) as f64)
            .fold(f64::INFINITY, f64::min);
        for i in 0..cut {
            q[i] = (m as f64 * sorted[i]).min(q1);
        }
        let tail = q[cut - 1];
        for item in q.iter_mut().take(n).skip(cut) {
            *item = tail;
        }
        for i in 0..n {
            pa[i] = pa[i].max(q[i]);
        }
    }
    let mut out = vec![0.0; n];
    for (pos, &idx) in order.iter().enumerate() {
        out[idx] = pa[pos].max(sorted[pos]).min(1.0);
    }
    out
}

/// Post-hoc comparison of every model against the best-ranked one:
/// normal-approximation p-values with Hommel adjustment. The best model
/// itself gets p = 1.
pub fn posthoc_vs_best(avg_ranks: &[f64], n_datasets: usize) -> Result<Vec<f64>> {
    let k = avg_ranks.len();
    if k < 2 || n_datasets < 1 {
        return Err(Error::Validation("posthoc needs >= 2 models".into()));
    }
    let best = avg_ranks
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let se = (k as f64 * (k as f64 + 1.0) / (6.0 * n_datasets as f64)).sqrt();
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let mut raw = Vec::new();
    let mut raw_idx = Vec::new();
    for (i, &r) in avg_ranks.iter().enumerate() {
        if i == best {
            continue;
        }
        let z = (r - avg_ranks[best]) / se;
        raw.push(2.0 * (1.0 - normal.cdf(z.abs())));
        raw_idx.push(i);
    }
    let adjusted = hommel_adjust(&raw);
    let mut out = vec![1.0; k];
    for (pos, &i) in raw_idx.iter().enumerate() {
        out[i] = adjusted[pos];
    }
    Ok(out)
}
