//! Nested cross-validation performance benchmark.
//!
//! Outer stratified folds estimate generalization; each outer training
//! split runs its own inner grid search, refits on the full split with the
//! chosen hyperparameters, and is scored on the held-out fold. A prior-rate
//! null model is always included as the floor.

use serde::{Deserialize, Serialize};

use crate::data::{stratified_kfold, Dataset};
use crate::metrics::{
    auc, average_precision, brier, rel_aec, savings, FoldMetrics, MetricReport,
};
use crate::models::{self, bayes_classify, CostBinding, HyperParams, ModelSpec};
use crate::rng;
use crate::Result;

use super::config::{parse_model_name, ExperimentConfig};
use super::grid::grid_search;

pub const NULL_MODEL: &str = "null";

/// One model's outer-fold results on one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBenchResult {
    pub model: String,
    pub folds: Vec<FoldMetrics>,
    /// Hyperparameters chosen by the inner search, one per outer fold.
    pub chosen: Vec<Option<HyperParams>>,
    pub summary: MetricReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset: String,
    pub seed: u64,
    pub results: Vec<ModelBenchResult>,
}

impl BenchReport {
    pub fn result(&self, model: &str) -> Option<&ModelBenchResult> {
        self.results.iter().find(|r| r.model == model)
    }
}

fn score_fold(
    y: &[u8],
    s: &[f64],
    costs: &crate::costs::CostSet,
    pi1: f64,
) -> Result<FoldMetrics> {
    let y_hat = bayes_classify(s, costs)?;
    Ok(FoldMetrics {
        auc: auc(y, s)?,
        ap: average_precision(y, s)?,
        brier: brier(y, s),
        rel_aec: rel_aec(y, s, costs, pi1)?,
        savings: savings(y, &y_hat, costs)?,
    })
}

/// Run the benchmark for every configured model plus the null model.
pub fn run_performance_bench(
    dataset_name: &str,
    data: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<BenchReport> {
    cfg.validate()?;
    let outer_seed = rng::derive(cfg.seed, &["bench", dataset_name, "outer"]);
    let folds = stratified_kfold(&data.y, cfg.outer_folds, outer_seed)?;

    // Prepare each outer fold once (raw splits; the pipeline refits inside).
    let splits: Vec<(Dataset, Dataset)> = folds
        .iter()
        .map(|(tr, te)| (data.subset(tr), data.subset(te)))
        .collect();

    let mut results = Vec::new();
    for name in &cfg.models {
        let (family, loss) = parse_model_name(name)?;
        let mut fold_metrics = Vec::with_capacity(splits.len());
        let mut chosen = Vec::with_capacity(splits.len());
        for (fi, (tr, te)) in splits.iter().enumerate() {
            let fold_seed =
                rng::derive(cfg.seed, &["bench", dataset_name, name, &fi.to_string()]);
            let search = grid_search(
                tr,
                family,
                loss,
                &cfg.grids,
                cfg.inner_folds,
                cfg.lgd,
                None,
                fold_seed,
            )?;
            let p = super::prepare(tr, &[te], cfg.lgd, None)?;
            let spec = ModelSpec {
                loss,
                hyper: search.best.clone(),
                seed: rng::derive(fold_seed, &["refit"]),
            };
            let binding = CostBinding { set: &p.train_costs, pi1: p.params.pi1 };
            let model = models::fit(&spec, p.train.matrix(), &p.train.y, Some(binding))?;
            let s = model.predict_proba(p.tests[0].matrix())?;
            fold_metrics.push(score_fold(&p.tests[0].y, &s, &p.test_costs[0], p.params.pi1)?);
            chosen.push(Some(search.best));
        }
        let summary = MetricReport::from_folds(name.clone(), &fold_metrics);
        results.push(ModelBenchResult {
            model: name.clone(),
            folds: fold_metrics,
            chosen,
            summary,
        });
    }

    // Null model: predict the training default rate for every instance. Its
    // scores carry no ranking information, so its decision policy is the
    // cheaper constant action, which is the savings baseline itself.
    let mut fold_metrics = Vec::with_capacity(splits.len());
    for (tr, te) in &splits {
        let p = super::prepare(tr, &[te], cfg.lgd, None)?;
        let costs = &p.test_costs[0];
        let y = &p.tests[0].y;
        let s = vec![p.params.pi1; p.tests[0].n_rows()];
        let all0 = crate::metrics::incurred_cost(y, &vec![0u8; y.len()], costs);
        let all1 = crate::metrics::incurred_cost(y, &vec![1u8; y.len()], costs);
        let y_hat = vec![u8::from(all1 < all0); y.len()];
        fold_metrics.push(FoldMetrics {
            auc: auc(y, &s)?,
            ap: average_precision(y, &s)?,
            brier: brier(y, &s),
            rel_aec: rel_aec(y, &s, costs, p.params.pi1)?,
            savings: savings(y, &y_hat, costs)?,
        });
    }
    let summary = MetricReport::from_folds(NULL_MODEL, &fold_metrics);
    results.push(ModelBenchResult {
        model: NULL_MODEL.into(),
        folds: fold_metrics,
        chosen: Vec::new(),
        summary,
    });

    Ok(BenchReport { dataset: dataset_name.into(), seed: cfg.seed, results })
}
