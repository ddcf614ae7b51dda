//! Random forest with bagging and per-split feature subsampling. The
//! cross-entropy variant splits on Gini impurity and averages leaf class
//! fractions; the cost-sensitive variant splits on the decrease in total
//! node cost, labels each leaf with the cost-minimizing class, and reports
//! the fraction of trees voting default.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::Node;
use super::{CostBinding, TrainedModel};
use crate::losses::LossKind;
use crate::rng;
use crate::{Error, Result};

/// Depth cap standing in for "unlimited".
pub const UNLIMITED_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    /// `None` means unlimited (capped at 64).
    pub max_depth: Option<usize>,
    pub n_estimators: usize,
    #[serde(default = "default_min_split")]
    pub min_samples_split: usize,
}

fn default_min_split() -> usize {
    2
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { max_depth: None, n_estimators: 100, min_samples_split: 2 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Node>,
    pub n_features: usize,
    pub loss: LossKind,
    pub params: ForestParams,
    pub seed: u64,
}

impl ForestModel {
    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        total / self.trees.len() as f64
    }
}

/// Total cost of classifying every row in a node as 0 or as 1; the node
/// cost is the smaller of the two.
fn node_costs(rows: &[usize], y: &[u8], c_fn: &[f64], c_fp: &[f64]) -> (f64, f64) {
    let mut cost_pred0 = 0.0; // pay c_fn for every positive
    let mut cost_pred1 = 0.0; // pay c_fp for every negative
    for &i in rows {
        if y[i] == 1 {
            cost_pred0 += c_fn[i];
        } else {
            cost_pred1 += c_fp[i];
        }
    }
    (cost_pred0, cost_pred1)
}

/// Best cost-decreasing split over the given candidate features, by
/// exhaustive scan of midpoint thresholds. Ties break toward the lower
/// feature index and lower threshold. Returns `(feature, threshold, gain)`.
pub fn best_cost_split(
    x: ArrayView2<'_, f64>,
    rows: &[usize],
    features: &[usize],
    y: &[u8],
    c_fn: &[f64],
    c_fp: &[f64],
) -> Option<(usize, f64, f64)> {
    let (p0, p1) = node_costs(rows, y, c_fn, c_fp);
    let parent = p0.min(p1);
    let mut best: Option<(usize, f64, f64)> = None;
    for &f in features {
        let mut vals: Vec<(f64, usize)> = rows.iter().map(|&i| (x[[i, f]], i)).collect();
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // prefix costs of the left side
        let mut l0 = 0.0;
        let mut l1 = 0.0;
        for k in 0..vals.len().saturating_sub(1) {
            let i = vals[k].1;
            if y[i] == 1 {
                l0 += c_fn[i];
            } else {
                l1 += c_fp[i];
            }
            if vals[k + 1].0 == vals[k].0 {
                continue;
            }
            let left = l0.min(l1);
            let right = (p0 - l0).min(p1 - l1);
            let gain = parent - left - right;
            if gain > 1e-12 && best.map_or(true, |(_, _, bg)| gain > bg) {
                let threshold = 0.5 * (vals[k].0 + vals[k + 1].0);
                best = Some((f, threshold, gain));
            }
        }
    }
    best
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Best Gini-decreasing split over the candidate features.
fn best_gini_split(
    x: ArrayView2<'_, f64>,
    rows: &[usize],
    features: &[usize],
    y: &[u8],
) -> Option<(usize, f64, f64)> {
    let n = rows.len() as f64;
    let total_pos = rows.iter().filter(|&&i| y[i] == 1).count() as f64;
    let parent = gini(total_pos, n);
    let mut best: Option<(usize, f64, f64)> = None;
    for &f in features {
        let mut vals: Vec<(f64, usize)> = rows.iter().map(|&i| (x[[i, f]], i)).collect();
        vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut left_pos = 0.0;
        for k in 0..vals.len().saturating_sub(1) {
            if y[vals[k].1] == 1 {
                left_pos += 1.0;
            }
            if vals[k + 1].0 == vals[k].0 {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = n - nl;
            let decrease =
                parent - nl / n * gini(left_pos, nl) - nr / n * gini(total_pos - left_pos, nr);
            if decrease > 1e-12 && best.map_or(true, |(_, _, bg)| decrease > bg) {
                let threshold = 0.5 * (vals[k].0 + vals[k + 1].0);
                best = Some((f, threshold, decrease));
            }
        }
    }
    best
}

struct ForestBuilder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    c_fn: &'a [f64],
    c_fp: &'a [f64],
    cost_based: bool,
    max_depth: usize,
    min_samples_split: usize,
    mtry: usize,
}

impl ForestBuilder<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let value = if self.cost_based {
            let (p0, p1) = node_costs(rows, self.y, self.c_fn, self.c_fp);
            // cost-minimizing class; ties go to no-default
            if p0 > p1 {
                1.0
            } else {
                0.0
            }
        } else {
            rows.iter().filter(|&&i| self.y[i] == 1).count() as f64 / rows.len() as f64
        };
        Node::Leaf { value }
    }

    fn build(&self, rows: &[usize], depth: usize, r: &mut ChaCha8Rng) -> Node {
        if depth >= self.max_depth || rows.len() < self.min_samples_split {
            return self.leaf(rows);
        }
        let d = self.x.ncols();
        let mut cols: Vec<usize> = (0..d).collect();
        cols.shuffle(r);
        let mut features = cols[..self.mtry.min(d)].to_vec();
        features.sort_unstable();

        let split = if self.cost_based {
            best_cost_split(self.x, rows, &features, self.y, self.c_fn, self.c_fp)
        } else {
            best_gini_split(self.x, rows, &features, self.y)
        };
        let Some((feature, threshold, _)) = split else {
            return self.leaf(rows);
        };
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &i in rows {
            if self.x[[i, feature]] <= threshold {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.build(&left, depth + 1, r)),
            right: Box::new(self.build(&right, depth + 1, r)),
        }
    }
}

pub fn fit_forest(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    cost: Option<CostBinding<'_>>,
    params: &ForestParams,
    loss: LossKind,
    seed: u64,
) -> Result<TrainedModel> {
    let n = y.len();
    if x.nrows() != n || n == 0 {
        return Err(Error::Validation("forest: bad training shapes".into()));
    }
    let d = x.ncols();
    let cost_based = loss.is_cost_sensitive();
    let (c_fn, c_fp): (Vec<f64>, Vec<f64>) = match cost {
        Some(c) => (c.set.c_fn.clone(), c.set.c_fp.clone()),
        None => (vec![0.0; n], vec![0.0; n]),
    };
    let builder = ForestBuilder {
        x: x.view(),
        y,
        c_fn: &c_fn,
        c_fp: &c_fp,
        cost_based,
        max_depth: params.max_depth.unwrap_or(UNLIMITED_DEPTH).min(UNLIMITED_DEPTH),
        min_samples_split: params.min_samples_split.max(2),
        mtry: (d as f64).sqrt().ceil() as usize,
    };

    // Trees are independent given their derived seeds, so order of
    // execution cannot change the result.
    let trees: Vec<Node> = crate::par::map_indexed(params.n_estimators, |t| {
        let mut r = rng::rng(rng::derive_n(seed, &[0xf03e57, t as u64]));
        let rows: Vec<usize> = (0..n).map(|_| r.gen_range(0..n)).collect();
        builder.build(&rows, 0, &mut r)
    });

    Ok(TrainedModel::Forest(ForestModel {
        trees,
        n_features: d,
        loss,
        params: params.clone(),
        seed,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::CostSet;
    use ndarray::array;

    #[test]
    fn pure_node_has_no_cost_split() {
        let x = array![[0.0], [1.0], [2.0]];
        let y = vec![0u8, 0, 0];
        let c_fn = vec![10.0; 3];
        let c_fp = vec![1.0; 3];
        let rows = [0, 1, 2];
        let (p0, _p1) = node_costs(&rows, &y, &c_fn, &c_fp);
        assert_eq!(p0, 0.0);
        // node cost = min(0, 3) = 0, so no split can improve it
        assert!(best_cost_split(x.view(), &rows, &[0], &y, &c_fn, &c_fp).is_none());
    }

    #[test]
    fn node_cost_example_one_expensive_positive() {
        // one positive with c_fn=100 and ten negatives with c_fp=1:
        // cost = min(100, 10) = 10 and the node label is "default".
        let y: Vec<u8> = std::iter::once(1u8).chain(std::iter::repeat(0u8).take(10)).collect();
        let c_fn = vec![100.0; 11];
        let c_fp = vec![1.0; 11];
        let rows: Vec<usize> = (0..11).collect();
        let (p0, p1) = node_costs(&rows, &y, &c_fn, &c_fp);
        assert_eq!(p0.min(p1), 10.0);
        assert!(p0 > p1); // cost-minimizing class is default
    }

    #[test]
    fn cost_split_matches_exhaustive_enumeration() {
        // randomized suite over small nodes
        use rand::Rng;
        let mut r = crate::rng::rng(23);
        for trial in 0..200 {
            let n = r.gen_range(4..=12);
            let d = r.gen_range(1..=3);
            let mut xv = Vec::new();
            let mut y = Vec::new();
            let mut c_fn = Vec::new();
            let mut c_fp = Vec::new();
            for _ in 0..n {
                for _ in 0..d {
                    xv.push(f64::from(r.gen_range(0..6)));
                }
                y.push(r.gen_range(0..2) as u8);
                c_fn.push(r.gen_range(0.0..50.0));
                c_fp.push(r.gen_range(0.0..10.0));
            }
            let x = ndarray::Array2::from_shape_vec((n, d), xv).unwrap();
            let rows: Vec<usize> = (0..n).collect();
            let features: Vec<usize> = (0..d).collect();
            let fast = best_cost_split(x.view(), &rows, &features, &y, &c_fn, &c_fp);

            // brute force: every (feature, midpoint threshold) partition
            let (p0, p1) = node_costs(&rows, &y, &c_fn, &c_fp);
            let parent = p0.min(p1);
            let mut best_gain = 0.0;
            for f in 0..d {
                let mut vals: Vec<f64> = rows.iter().map(|&i| x[[i, f]]).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vals.dedup();
                for w in vals.windows(2) {
                    let t = 0.5 * (w[0] + w[1]);
                    let left: Vec<usize> =
                        rows.iter().copied().filter(|&i| x[[i, f]] <= t).collect();
                    let right: Vec<usize> =
                        rows.iter().copied().filter(|&i| x[[i, f]] > t).collect();
                    let (l0, l1) = node_costs(&left, &y, &c_fn, &c_fp);
                    let (r0, r1) = node_costs(&right, &y, &c_fn, &c_fp);
                    let gain = parent - l0.min(l1) - r0.min(r1);
                    if gain > best_gain {
                        best_gain = gain;
                    }
                }
            }
            match fast {
                Some((_, _, g)) => {
                    assert!(
                        (g - best_gain).abs() < 1e-9,
                        "trial {trial}: fast gain {g} vs brute {best_gain}"
                    );
                }
                None => assert!(best_gain <= 1e-12, "trial {trial}: missed gain {best_gain}"),
            }
        }
    }

    #[test]
    fn predictions_stay_in_unit_interval_and_determinism() {
        use rand::Rng;
        let mut r = crate::rng::rng(31);
        let n = 60;
        let mut xv = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = r.gen_range(-1.0..1.0);
            let b: f64 = r.gen_range(-1.0..1.0);
            xv.extend([a, b]);
            y.push(u8::from(a - b > 0.1));
        }
        let x = ndarray::Array2::from_shape_vec((n, 2), xv).unwrap();
        let costs = CostSet::uniform(n);
        let binding = CostBinding { set: &costs, pi1: 0.5 };
        for n_estimators in [20, 100] {
            let params = ForestParams { n_estimators, max_depth: Some(5), min_samples_split: 2 };
            let m = fit_forest(x.view(), &y, Some(binding), &params, LossKind::Aec, 5).unwrap();
            let s = m.predict_proba(x.view()).unwrap();
            assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
            let m2 = fit_forest(x.view(), &y, Some(binding), &params, LossKind::Aec, 5).unwrap();
            assert_eq!(s, m2.predict_proba(x.view()).unwrap());
        }
    }

    #[test]
    fn single_class_bootstrap_gives_leaf() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = vec![0u8, 0, 0, 0];
        let params = ForestParams { n_estimators: 3, max_depth: Some(4), min_samples_split: 2 };
        let m = fit_forest(x.view(), &y, None, &params, LossKind::CrossEntropy, 2).unwrap();
        let s = m.predict_proba(x.view()).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }
}
