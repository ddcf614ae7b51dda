//! Experiment harnesses.
//!
//! [`bench`] runs the nested cross-validation performance benchmark: outer
//! folds for evaluation, inner folds for hyperparameter selection, all
//! preprocessing and cost fitting done inside each training split.
//! [`stability`] runs the explanation stability study: refit the model many
//! times on resampled training sets across a range of default rates and
//! measure how much the per-instance explanations move.

mod bench;
mod config;
mod grid;
mod report;
mod stability;

pub use bench::{run_performance_bench, BenchReport, ModelBenchResult, NULL_MODEL};
pub use config::{apply_override, parse_model_name, ExperimentConfig, StabilityConfig};
pub use grid::{grid_search, BoostGrid, ForestGrid, GridSearchResult, GridSpec, LogitGrid, NetGrid};
pub use report::{
    write_bench_csv, write_instance_csv, write_manifest, write_rank_csv, write_stability_csv,
};
pub use stability::run_stability_experiment;

use crate::costs::{build_cost_set, fit_cost_params, CostParams, CostSet};
use crate::data::{one_hot_encode, standardize, Dataset, Imputer};
use crate::Result;

/// A training split with its companion evaluation splits after the full
/// leakage-safe pipeline: one-hot encoding, median imputation and
/// standardization fitted on the training rows only, plus cost parameters
/// fitted on the training rows (or pinned priors).
pub struct Prepared {
    pub train: Dataset,
    pub tests: Vec<Dataset>,
    pub params: CostParams,
    pub train_costs: CostSet,
    pub test_costs: Vec<CostSet>,
}

pub fn prepare(
    train_raw: &Dataset,
    tests_raw: &[&Dataset],
    lgd: f64,
    priors: Option<(f64, f64)>,
) -> Result<Prepared> {
    let (train_enc, onehot) = one_hot_encode(train_raw);
    let tests_enc: Vec<Dataset> =
        tests_raw.iter().map(|d| onehot.transform(d).0).collect();

    let imputer = Imputer::fit(&train_enc);
    let train_imp = imputer.transform(&train_enc);
    let tests_imp: Vec<Dataset> = tests_enc.iter().map(|d| imputer.transform(d)).collect();

    let test_refs: Vec<&Dataset> = tests_imp.iter().collect();
    let (train, tests, _std) = standardize(&train_imp, &test_refs);

    let params = fit_cost_params(&train, lgd, priors)?;
    let train_costs = build_cost_set(&train, &params);
    let test_costs = tests.iter().map(|d| build_cost_set(d, &params)).collect();
    Ok(Prepared { train, tests, params, train_costs, test_costs })
}
