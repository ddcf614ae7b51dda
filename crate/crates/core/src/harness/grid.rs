//! Hyperparameter grids and inner cross-validated grid search.
//!
//! Candidates are scored on inner stratified folds with AUC for
//! cross-entropy models and relative AEC for cost-sensitive ones. Ties keep
//! the earliest candidate, so the search is deterministic for a fixed grid
//! order and seed.

use serde::{Deserialize, Serialize};

use crate::data::{stratified_kfold, Dataset};
use crate::losses::LossKind;
use crate::metrics::{auc, rel_aec};
use crate::models::{
    self, BoostParams, CostBinding, Family, ForestParams, HyperParams, LogitParams, ModelSpec,
    NetParams, Penalty,
};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub logit: LogitGrid,
    pub boost: BoostGrid,
    pub forest: ForestGrid,
    pub net: NetGrid,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            logit: LogitGrid::default(),
            boost: BoostGrid::default(),
            forest: ForestGrid::default(),
            net: NetGrid::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogitGrid {
    pub penalty: Vec<Penalty>,
    /// Penalty weights on the coefficients; 0 fits unpenalized.
    pub c: Vec<f64>,
}

impl Default for LogitGrid {
    fn default() -> Self {
        LogitGrid {
            penalty: vec![Penalty::L1, Penalty::L2],
            c: vec![0.0, 1e-4, 3e-4, 6e-4, 1e-3, 3e-3, 6e-3, 1e-2, 3e-2, 1e-1],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoostGrid {
    pub learning_rate: Vec<f64>,
    pub min_child_weight: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub colsample_bytree: Vec<f64>,
    pub gamma: Vec<f64>,
    pub n_rounds: usize,
}

impl Default for BoostGrid {
    fn default() -> Self {
        BoostGrid {
            learning_rate: vec![0.3],
            min_child_weight: vec![0.0, 50.0],
            max_depth: vec![1, 3, 5, 7],
            colsample_bytree: vec![0.8, 1.0],
            gamma: vec![0.0, 5.0, 10.0],
            n_rounds: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestGrid {
    /// Depth limits; 0 means unlimited.
    pub max_depth: Vec<usize>,
    pub n_estimators: Vec<usize>,
}

impl Default for ForestGrid {
    fn default() -> Self {
        ForestGrid { max_depth: vec![0, 3, 5, 10], n_estimators: vec![20, 50, 100] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetGrid {
    pub learning_rate: Vec<f64>,
    pub hidden: Vec<usize>,
}

impl Default for NetGrid {
    fn default() -> Self {
        NetGrid { learning_rate: vec![0.005], hidden: vec![32, 64, 128] }
    }
}

impl GridSpec {
    /// Enumerate candidates for a family in a fixed order.
    pub fn expand(&self, family: Family) -> Vec<HyperParams> {
        match family {
            Family::Logit => {
                let mut out = Vec::new();
                for &p in &self.logit.penalty {
                    for &c in &self.logit.c {
                        out.push(HyperParams::Logit(LogitParams {
                            penalty: p,
                            c,
                            ..LogitParams::default()
                        }));
                    }
                }
                out
            }
            Family::Boost => {
                let g = &self.boost;
                let mut out = Vec::new();
                for &lr in &g.learning_rate {
                    for &mcw in &g.min_child_weight {
                        for &d in &g.max_depth {
                            for &cs in &g.colsample_bytree {
                                for &gm in &g.gamma {
                                    out.push(HyperParams::Boost(BoostParams {
                                        learning_rate: lr,
                                        min_child_weight: mcw,
                                        max_depth: d,
                                        colsample_bytree: cs,
                                        gamma: gm,
                                        n_rounds: g.n_rounds,
                                        ..BoostParams::default()
                                    }));
                                }
                            }
                        }
                    }
                }
                out
            }
            Family::Forest => {
                let mut out = Vec::new();
                for &d in &self.forest.max_depth {
                    for &n in &self.forest.n_estimators {
                        out.push(HyperParams::Forest(ForestParams {
                            max_depth: if d == 0 { None } else { Some(d) },
                            n_estimators: n,
                            ..ForestParams::default()
                        }));
                    }
                }
                out
            }
            Family::Net => {
                let mut out = Vec::new();
                for &lr in &self.net.learning_rate {
                    for &h in &self.net.hidden {
                        out.push(HyperParams::Net(NetParams {
                            hidden: h,
                            learning_rate: lr,
                            ..NetParams::default()
                        }));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best: HyperParams,
    pub best_score: f64,
    /// Mean inner-fold score per candidate, in grid order.
    pub scores: Vec<f64>,
}

/// Inner cross-validated grid search on a raw (unencoded) training split.
///
/// Every inner fold refits the whole preprocessing and cost pipeline on its
/// own training rows. `priors` is forwarded to cost fitting so callers can
/// pin the class priors (the stability experiment does).
pub fn grid_search(
    train_raw: &Dataset,
    family: Family,
    loss: LossKind,
    grid: &GridSpec,
    inner_folds: usize,
    lgd: f64,
    priors: Option<(f64, f64)>,
    seed: u64,
) -> Result<GridSearchResult> {
    let candidates = grid.expand(family);
    if candidates.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let folds = stratified_kfold(&train_raw.y, inner_folds, rng::derive(seed, &["inner"]))?;

    // Prepare each inner fold once; every candidate reuses them.
    let mut prepared = Vec::with_capacity(folds.len());
    for (tr_idx, te_idx) in &folds {
        let tr = train_raw.subset(tr_idx);
        let te = train_raw.subset(te_idx);
        prepared.push(super::prepare(&tr, &[&te], lgd, priors)?);
    }

    let mut scores = Vec::with_capacity(candidates.len());
    let mut best_idx = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (ci, hyper) in candidates.iter().enumerate() {
        let mut fold_scores = Vec::with_capacity(prepared.len());
        for (fi, p) in prepared.iter().enumerate() {
            let spec = ModelSpec {
                loss,
                hyper: hyper.clone(),
                seed: rng::derive_n(seed, &[ci as u64, fi as u64]),
            };
            let binding = CostBinding { set: &p.train_costs, pi1: p.params.pi1 };
            let model = models::fit(&spec, p.train.matrix(), &p.train.y, Some(binding))?;
            let s = model.predict_proba(p.tests[0].matrix())?;
            let score = match loss {
                LossKind::CrossEntropy => auc(&p.tests[0].y, &s)?,
                LossKind::Aec => rel_aec(&p.tests[0].y, &s, &p.test_costs[0], p.params.pi1)?,
            };
            fold_scores.push(score);
        }
        let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        scores.push(mean);
        if mean > best_score {
            best_score = mean;
            best_idx = ci;
        }
    }
    Ok(GridSearchResult { best: candidates[best_idx].clone(), best_score, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn default_grid_sizes_match_protocol() {
        let g = GridSpec::default();
        assert_eq!(g.expand(Family::Logit).len(), 20);
        assert_eq!(g.expand(Family::Boost).len(), 48);
        assert_eq!(g.expand(Family::Forest).len(), 12);
        assert_eq!(g.expand(Family::Net).len(), 3);
    }

    #[test]
    fn search_is_deterministic_and_picks_first_on_ties() {
        let ds = generate(&SynthConfig::tiny(1)).unwrap();
        let grid = GridSpec {
            logit: LogitGrid { penalty: vec![Penalty::L2], c: vec![1e-2, 1e-2, 1.0] },
            ..GridSpec::default()
        };
        let a = grid_search(
            &ds,
            Family::Logit,
            LossKind::CrossEntropy,
            &grid,
            3,
            0.75,
            None,
            9,
        )
        .unwrap();
        let b = grid_search(
            &ds,
            Family::Logit,
            LossKind::CrossEntropy,
            &grid,
            3,
            0.75,
            None,
            9,
        )
        .unwrap();
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.best, b.best);
        // duplicated candidate scores identically; tie keeps the first
        assert_eq!(a.scores[0], a.scores[1]);
        if a.scores[0] >= a.scores[2] {
            assert_eq!(a.best, grid.expand(Family::Logit)[0]);
        }
    }
}
