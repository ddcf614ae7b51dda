//! Second-order gradient boosting with regression trees fit to the
//! per-instance gradient and hessian of the chosen objective. Split gain is
//! the standard second-order formula with an L2 leaf penalty and a `gamma`
//! complexity penalty; candidate thresholds are midpoints between
//! consecutive unique feature values, capped at 256 quantile bins on
//! high-cardinality columns.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tree::Node;
use super::{CostBinding, TrainedModel};
use crate::losses::{self, LossKind};
use crate::rng;
use crate::{Error, Result};

const MAX_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub max_depth: usize,
    pub colsample_bytree: f64,
    pub gamma: f64,
    #[serde(default = "default_rounds")]
    pub n_rounds: usize,
    /// L2 penalty on leaf values.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_early_stop")]
    pub early_stop_rounds: usize,
    #[serde(default = "default_min_improvement")]
    pub min_improvement: f64,
}

fn default_rounds() -> usize {
    100
}
fn default_lambda() -> f64 {
    1.0
}
fn default_early_stop() -> usize {
    10
}
fn default_min_improvement() -> f64 {
    1e-6
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            learning_rate: 0.3,
            min_child_weight: 0.0,
            max_depth: 3,
            colsample_bytree: 1.0,
            gamma: 0.0,
            n_rounds: 100,
            lambda: 1.0,
            early_stop_rounds: 10,
            min_improvement: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostModel {
    pub base_margin: f64,
    pub learning_rate: f64,
    pub trees: Vec<Node>,
    pub n_features: usize,
    pub loss: LossKind,
    pub params: BoostParams,
    pub seed: u64,
    pub loss_curve: Vec<f64>,
}

impl BoostModel {
    pub fn raw_margin(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.base_margin
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(x))
                .sum::<f64>()
    }

    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        losses::logistic(self.raw_margin(x))
    }
}

/// Per-feature candidate thresholds and the binned column.
struct BinnedFeature {
    thresholds: Vec<f64>,
    bins: Vec<u16>,
}

fn bin_feature(col: ArrayView1<'_, f64>) -> BinnedFeature {
    let mut sorted: Vec<f64> = col.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    let candidates: Vec<f64> = if sorted.len() <= MAX_BINS {
        sorted
    } else {
        // Evenly spaced quantiles of the unique values.
        (0..MAX_BINS)
            .map(|k| sorted[k * (sorted.len() - 1) / (MAX_BINS - 1)])
            .collect::<Vec<_>>()
    };
    let thresholds: Vec<f64> =
        candidates.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let bins = col
        .iter()
        .map(|&v| thresholds.partition_point(|&t| t < v) as u16)
        .collect();
    BinnedFeature { thresholds, bins }
}

struct TreeBuilder<'a> {
    features: &'a [BinnedFeature],
    grad: &'a [f64],
    hess: &'a [f64],
    active: &'a [usize], // feature indices usable this tree
    params: &'a BoostParams,
}

impl TreeBuilder<'_> {
    fn build(&self, rows: &[usize], depth: usize) -> Node {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let leaf = || Node::Leaf { value: -g / (h + self.params.lambda) };
        if depth >= self.params.max_depth || rows.len() < 2 {
            return leaf();
        }

        let parent_score = g * g / (h + self.params.lambda);
        let mut best: Option<(f64, usize, usize)> = None; // (gain, feature, bin)
        for &f in self.active {
            let feat = &self.features[f];
            if feat.thresholds.is_empty() {
                continue;
            }
            let nb = feat.thresholds.len() + 1;
            let mut gh = vec![(0.0f64, 0.0f64); nb];
            for &i in rows {
                let b = feat.bins[i] as usize;
                gh[b].0 += self.grad[i];
                gh[b].1 += self.hess[i];
            }
            let mut gl = 0.0;
            let mut hl = 0.0;
            for bin in 0..feat.thresholds.len() {
                gl += gh[bin].0;
                hl += gh[bin].1;
                let gr = g - gl;
                let hr = h - hl;
                if hl < self.params.min_child_weight || hr < self.params.min_child_weight {
                    continue;
                }
                let gain = 0.5
                    * (gl * gl / (hl + self.params.lambda) + gr * gr / (hr + self.params.lambda)
                        - parent_score)
                    - self.params.gamma;
                // Strict improvement keeps the (lower feature, lower
                // threshold) tie-break deterministic.
                if gain > 1e-12 && best.map_or(true, |(bg, _, _)| gain > bg) {
                    best = Some((gain, f, bin));
                }
            }
        }

        let Some((_, feature, bin)) = best else {
            return leaf();
        };
        let feat = &self.features[feature];
        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for &i in rows {
            if (feat.bins[i] as usize) <= bin {
                left_rows.push(i);
            } else {
                right_rows.push(i);
            }
        }
        if left_rows.is_empty() || right_rows.is_empty() {
            return leaf();
        }
        Node::Split {
            feature,
            threshold: feat.thresholds[bin],
            left: Box::new(self.build(&left_rows, depth + 1)),
            right: Box::new(self.build(&right_rows, depth + 1)),
        }
    }
}

pub fn fit_boost(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    cost: Option<CostBinding<'_>>,
    params: &BoostParams,
    loss: LossKind,
    seed: u64,
) -> Result<TrainedModel> {
    let n = y.len();
    if x.nrows() != n || n == 0 {
        return Err(Error::Validation("boost: bad training shapes".into()));
    }
    let d = x.ncols();
    let features: Vec<BinnedFeature> = crate::par::map_indexed(d, |j| bin_feature(x.column(j)));

    let pos_rate = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
    let base_margin = match loss {
        LossKind::CrossEntropy => losses::logit(pos_rate),
        LossKind::Aec => losses::logit(cost.map_or(pos_rate, |c| c.pi1)),
    };

    let mut margins = vec![base_margin; n];
    let mut trees: Vec<Node> = Vec::new();
    let mut curve: Vec<f64> = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut rounds_since_best = 0usize;

    let mean_loss = |margins: &[f64]| -> f64 {
        match loss {
            LossKind::CrossEntropy => {
                margins
                    .iter()
                    .zip(y)
                    .map(|(&z, &yi)| losses::ce_instance(yi, losses::logistic(z)))
                    .sum::<f64>()
                    / n as f64
            }
            LossKind::Aec => {
                let c = cost.expect("AEC requires costs");
                margins
                    .iter()
                    .enumerate()
                    .map(|(i, &z)| {
                        losses::aec_instance(y[i], losses::logistic(z), c.set.c_fn[i], c.set.c_fp[i])
                    })
                    .sum::<f64>()
                    / n as f64
            }
        }
    };

    let all_rows: Vec<usize> = (0..n).collect();
    for round in 0..params.n_rounds {
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for i in 0..n {
            let (g, h) = match loss {
                LossKind::CrossEntropy => losses::ce_grad_hess(y[i], margins[i]),
                LossKind::Aec => {
                    let c = cost.expect("AEC requires costs");
                    let (g, h) = losses::aec_grad_hess(y[i], margins[i], c.set.c_fn[i], c.set.c_fp[i]);
                    (g, losses::floor_hessian(h))
                }
            };
            if !g.is_finite() || !h.is_finite() {
                return Err(Error::Numeric(format!("boost: non-finite gradient at round {round}")));
            }
            grad[i] = g;
            hess[i] = h.max(losses::HESSIAN_FLOOR);
        }

        let active: Vec<usize> = if params.colsample_bytree < 1.0 {
            let take = ((params.colsample_bytree * d as f64).ceil() as usize).clamp(1, d);
            let mut cols: Vec<usize> = (0..d).collect();
            let mut r = rng::rng(rng::derive_n(seed, &[0xb005, round as u64]));
            cols.shuffle(&mut r);
            let mut chosen = cols[..take].to_vec();
            chosen.sort_unstable();
            chosen
        } else {
            (0..d).collect()
        };

        let builder = TreeBuilder { features: &features, grad: &grad, hess: &hess, active: &active, params };
        let tree = builder.build(&all_rows, 0);
        let degenerate = tree.n_splits() == 0;
        for (i, m) in margins.iter_mut().enumerate() {
            *m += params.learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
        let l = mean_loss(&margins);
        curve.push(l);

        if l < best_loss - params.min_improvement {
            best_loss = l;
            rounds_since_best = 0;
        } else {
            rounds_since_best += 1;
        }
        if degenerate || rounds_since_best >= params.early_stop_rounds {
            break;
        }
    }

    Ok(TrainedModel::Boost(BoostModel {
        base_margin,
        learning_rate: params.learning_rate,
        trees,
        n_features: d,
        loss,
        params: params.clone(),
        seed,
        loss_curve: curve,
    }))
}
