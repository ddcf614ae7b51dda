//! Explanation stability metrics: per-instance coefficient of variation of
//! importance values across iterations, sequential rank agreement of
//! importance rankings, and a two-sample Kolmogorov-Smirnov test for
//! comparing stability distributions between models.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::metrics::mean_sd;
use crate::{Error, Result};

/// Features whose mean absolute importance falls below this are excluded
/// from the CoV average; a ratio against a vanishing mean is noise.
pub const COV_MEAN_GUARD: f64 = 1e-12;

/// Per-instance CoV: for each feature, sample sd over iterations divided by
/// the mean absolute importance, averaged over included features. Rows are
/// iterations, columns are features. Returns `None` when every feature is
/// excluded by the near-zero-mean guard.
pub fn cov_instance(values: ArrayView2<'_, f64>) -> Result<Option<f64>> {
    let j = values.nrows();
    if j < 2 {
        return Err(Error::Validation("CoV needs at least 2 iterations".into()));
    }
    let mut total = 0.0;
    let mut included = 0usize;
    for p in 0..values.ncols() {
        let col = values.column(p);
        let mu_abs = col.iter().map(|v| v.abs()).sum::<f64>() / j as f64;
        if mu_abs < COV_MEAN_GUARD {
            continue;
        }
        let mean = col.sum() / j as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (j - 1) as f64;
        total += var.sqrt() / mu_abs;
        included += 1;
    }
    if included == 0 {
        return Ok(None);
    }
    Ok(Some(total / included as f64))
}

/// Sample variance (denominator L-1) of one feature's rank across lists.
pub fn rank_agreement(ranks: &[f64]) -> f64 {
    let l = ranks.len();
    assert!(l >= 2, "rank agreement needs >= 2 lists");
    let mean = ranks.iter().sum::<f64>() / l as f64;
    ranks.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (l - 1) as f64
}

/// Sequential rank agreement at depth `d` over `L` rank lists (each list
/// maps feature index -> rank, 1 = most important). `S(d)` is the set of
/// features ranked within the top `d` in at least one list; the result is
/// the mean rank variance over `S(d)`.
pub fn sra(rank_lists: &[Vec<usize>], depth: usize) -> Result<f64> {
    if rank_lists.len() < 2 {
        return Err(Error::Validation("SRA needs >= 2 lists".into()));
    }
    let p = rank_lists[0].len();
    if depth == 0 || depth > p {
        return Err(Error::Validation(format!("depth must be in 1..={p}, got {depth}")));
    }
    if rank_lists.iter().any(|l| l.len() != p) {
        return Err(Error::Validation("rank lists differ in length".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for feat in 0..p {
        let in_set = rank_lists.iter().any(|l| l[feat] <= depth);
        if !in_set {
            continue;
        }
        let ranks: Vec<f64> = rank_lists.iter().map(|l| l[feat] as f64).collect();
        total += rank_agreement(&ranks);
        count += 1;
    }
    Ok(total / count as f64)
}

/// Empirical CDF evaluated across the pooled support.
fn ecdf_steps(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut pooled: Vec<f64> = sa.iter().chain(sb.iter()).copied().collect();
    pooled.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pooled.dedup();
    let count_le = |s: &[f64], x: f64| s.partition_point(|&v| v <= x) as f64;
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut d_plus = 0.0; // sup (Fa - Fb)
    let mut d_minus = 0.0; // sup (Fb - Fa)
    for &x in &pooled {
        let diff = count_le(&sa, x) / na - count_le(&sb, x) / nb;
        d_plus = f64::max(d_plus, diff);
        d_minus = f64::max(d_minus, -diff);
    }
    (d_plus, d_minus)
}

/// Alternative hypothesis for the KS test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KsAlternative {
    TwoSided,
    /// Distribution of `a` is stochastically greater than `b`
    /// (its CDF lies below `b`'s).
    Greater,
    /// Distribution of `a` is stochastically smaller than `b`.
    Less,
}

/// Two-sample Kolmogorov-Smirnov test with asymptotic p-values.
pub fn ks_two_sample(a: &[f64], b: &[f64], alternative: KsAlternative) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Validation("KS test needs nonempty samples".into()));
    }
    let (d_plus, d_minus) = ecdf_steps(a, b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let en = na * nb / (na + nb);
    let (stat, p) = match alternative {
        KsAlternative::TwoSided => {
            let d = d_plus.max(d_minus);
            // Kolmogorov asymptotic series; it does not converge at
            // lambda ~ 0, where the p-value is 1 by definition.
            let lambda = (en.sqrt() + 0.12 + 0.11 / en.sqrt()) * d;
            let p = if lambda < 1e-3 {
                1.0
            } else {
                let mut acc = 0.0;
                let mut sign = 1.0;
                for k in 1..=100 {
                    let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
                    acc += 2.0 * sign * term;
                    sign = -sign;
                    if term < 1e-12 {
                        break;
                    }
                }
                acc.clamp(0.0, 1.0)
            };
            (d, p)
        }
        KsAlternative::Greater => {
            // a stochastically greater => Fa below Fb => statistic = sup(Fb - Fa)
            let d = d_minus;
            (d, (-2.0 * en * d * d).exp().min(1.0))
        }
        KsAlternative::Less => {
            let d = d_plus;
            (d, (-2.0 * en * d * d).exp().min(1.0))
        }
    };
    Ok((stat, p))
}

/// Stability of one instance at one resampled default rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceStability {
    pub pi: f64,
    pub instance: usize,
    pub cov: Option<f64>,
    pub sra: f64,
}

/// Distribution summary of a stability metric at one default rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub pi: f64,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
}

/// Per-(model, method) stability results across all default rates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub model: String,
    pub method: String,
    pub per_instance: Vec<InstanceStability>,
    pub cov_summary: Vec<StabilitySummary>,
    pub sra_summary: Vec<StabilitySummary>,
}

pub fn median_of(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl StabilityReport {
    /// Build summaries from the per-instance rows.
    pub fn summarize(model: &str, method: &str, rows: Vec<InstanceStability>) -> Self {
        let mut pis: Vec<f64> = rows.iter().map(|r| r.pi).collect();
        pis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pis.dedup();
        let mut cov_summary = Vec::new();
        let mut sra_summary = Vec::new();
        for &pi in &pis {
            let covs: Vec<f64> =
                rows.iter().filter(|r| r.pi == pi).filter_map(|r| r.cov).collect();
            let sras: Vec<f64> = rows.iter().filter(|r| r.pi == pi).map(|r| r.sra).collect();
            let cm = mean_sd(&covs);
            cov_summary.push(StabilitySummary {
                pi,
                mean: cm.mean,
                sd: cm.sd,
                median: median_of(&covs),
            });
            let sm = mean_sd(&sras);
            sra_summary.push(StabilitySummary {
                pi,
                mean: sm.mean,
                sd: sm.sd,
                median: median_of(&sras),
            });
        }
        StabilityReport {
            model: model.into(),
            method: method.into(),
            per_instance: rows,
            cov_summary,
            sra_summary,
        }
    }

    /// CoV values at a given rate, for distribution tests.
    pub fn cov_values_at(&self, pi: f64) -> Vec<f64> {
        self.per_instance
            .iter()
            .filter(|r| r.pi == pi)
            .filter_map(|r| r.cov)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn cov_zero_for_identical_iterations() {
        let v = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        assert_relative_eq!(cov_instance(v.view()).unwrap().unwrap(), 0.0);
    }

    #[test]
    fn cov_single_feature_arithmetic() {
        // values {1,2,3}: sd = 1, mean = 2 -> 0.5
        let v = array![[1.0], [2.0], [3.0]];
        assert_relative_eq!(cov_instance(v.view()).unwrap().unwrap(), 0.5);
    }

    #[test]
    fn cov_averages_over_features() {
        // feature CoVs 0.5 and 0.1 -> 0.3
        let v = array![[1.0, 10.0], [2.0, 11.0], [3.0, 9.0]];
        let f1 = 1.0 / 2.0;
        let f2 = 1.0 / 10.0;
        assert_relative_eq!(cov_instance(v.view()).unwrap().unwrap(), (f1 + f2) / 2.0);
    }

    #[test]
    fn cov_guard_excludes_zero_features() {
        let v = array![[0.0, 1.0], [0.0, 2.0], [0.0, 3.0]];
        assert_relative_eq!(cov_instance(v.view()).unwrap().unwrap(), 0.5);
        let all_zero = array![[0.0], [0.0]];
        assert!(cov_instance(all_zero.view()).unwrap().is_none());
    }

    #[test]
    fn cov_scale_invariant_per_feature() {
        let v = array![[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]];
        let mut w = v.clone();
        for r in w.column_mut(0) {
            *r *= 13.0;
        }
        assert_relative_eq!(
            cov_instance(v.view()).unwrap().unwrap(),
            cov_instance(w.view()).unwrap().unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn rank_agreement_worked_examples() {
        assert_relative_eq!(rank_agreement(&[4.0, 4.0, 3.0]), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(rank_agreement(&[2.0, 3.0, 4.0]), 1.0);
        assert_relative_eq!(rank_agreement(&[5.0, 5.0, 5.0]), 0.0);
    }

    /// The published five-feature worked example: three rank lists over
    /// features A..E.
    fn worked_lists() -> Vec<Vec<usize>> {
        vec![vec![4, 2, 3, 1, 5], vec![4, 3, 2, 1, 5], vec![3, 4, 1, 2, 5]]
    }

    #[test]
    fn sra_worked_example() {
        let lists = worked_lists();
        assert_relative_eq!(sra(&lists, 1).unwrap(), 0.67, epsilon = 0.005);
        // exact value is 7/9 = 0.778; the published table truncates to .77
        assert_relative_eq!(sra(&lists, 2).unwrap(), 7.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(sra(&lists, 3).unwrap(), 0.67, epsilon = 0.005);
        assert_relative_eq!(sra(&lists, 4).unwrap(), 0.67, epsilon = 0.005);
        assert_relative_eq!(sra(&lists, 5).unwrap(), 0.53, epsilon = 0.005);
        assert!(sra(&lists, 6).is_err());
    }

    #[test]
    fn sra_identical_lists_zero() {
        let l = vec![vec![1, 2, 3, 4], vec![1, 2, 3, 4]];
        for d in 1..=4 {
            assert_relative_eq!(sra(&l, d).unwrap(), 0.0);
        }
    }

    #[test]
    fn sra_adjacent_swap_formula() {
        // L=2 lists, one adjacent pair swapped: both swapped features have
        // rank variance 0.5, so SRA at full depth is 2*0.5/P.
        let p = 6;
        let a: Vec<usize> = (1..=p).collect();
        let mut b = a.clone();
        b.swap(2, 3);
        let val = sra(&[a, b], p).unwrap();
        assert_relative_eq!(val, 2.0 * 0.5 / p as f64, epsilon = 1e-12);
    }

    #[test]
    fn sra_invariant_under_feature_relabeling() {
        let lists = worked_lists();
        let perm = [3usize, 0, 4, 1, 2];
        let permuted: Vec<Vec<usize>> = lists
            .iter()
            .map(|l| perm.iter().map(|&src| l[src]).collect())
            .collect();
        for d in 1..=5 {
            assert_relative_eq!(sra(&lists, d).unwrap(), sra(&permuted, d).unwrap());
        }
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let (stat, p) = ks_two_sample(&a, &a, KsAlternative::TwoSided).unwrap();
        assert_relative_eq!(stat, 0.0);
        assert_relative_eq!(p, 1.0, epsilon = 1e-9);
        let b: Vec<f64> = (100..200).map(|i| i as f64).collect();
        let (stat, p) = ks_two_sample(&a, &b, KsAlternative::TwoSided).unwrap();
        assert_relative_eq!(stat, 1.0);
        assert!(p < 1e-6);
    }

    #[test]
    fn ks_one_sided_direction() {
        let a: Vec<f64> = (0..50).map(|i| i as f64 + 30.0).collect();
        let b: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let (_, p_greater) = ks_two_sample(&a, &b, KsAlternative::Greater).unwrap();
        let (_, p_less) = ks_two_sample(&a, &b, KsAlternative::Less).unwrap();
        assert!(p_greater < 0.05);
        assert!(p_less > 0.5);
    }

    /// Permutation-test oracle for the two-sided KS p-value.
    #[test]
    fn ks_p_matches_permutation_oracle() {
        let mut r = crate::rng::rng(17);
        let n = 50;
        let a: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..1.0) + 0.25).collect();
        let (stat, p) = ks_two_sample(&a, &b, KsAlternative::TwoSided).unwrap();

        let mut pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
        let mut exceed = 0usize;
        let trials = 2000;
        for _ in 0..trials {
            use rand::seq::SliceRandom;
            pooled.shuffle(&mut r);
            let (pa, pb) = pooled.split_at(n);
            let (d_plus, d_minus) = ecdf_steps(pa, pb);
            if d_plus.max(d_minus) >= stat - 1e-12 {
                exceed += 1;
            }
        }
        let p_perm = exceed as f64 / trials as f64;
        assert!((p - p_perm).abs() < 0.02, "asymptotic {p} vs permutation {p_perm}");
    }
}
