//! Explanation stability experiment.
//!
//! Hold out a fixed test set, then repeatedly resample the remaining rows to
//! a target default rate, refit the model, and re-explain every test
//! instance. Per-instance dispersion across refits (CoV of attributions,
//! rank agreement of the top features) quantifies how fragile the
//! explanations are at each class imbalance level. Class priors in the cost
//! model stay pinned at the original dataset rates so costs do not drift
//! with the resampling.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::costs::{build_cost_set, fit_cost_params};
use crate::data::{resample_to_rate, split_stability_test, Dataset, TrainSummary};
use crate::explain::{lime_explain, rank_features, shap_permutation, Method, ShapConfig};
use crate::models::{self, CostBinding, ModelSpec, TrainedModel};
use crate::rng;
use crate::stability::{cov_instance, sra, InstanceStability, StabilityReport};
use crate::{par, Error, Result};

use super::config::{parse_model_name, ExperimentConfig};
use super::grid::grid_search;

/// Attribution tensor for one (model, rate) cell: `values[j][instance]` is
/// the per-feature attribution vector from refit iteration `j`.
#[derive(Debug, Serialize, Deserialize)]
struct CellCheckpoint {
    format_version: u32,
    model: String,
    rate_bp: u64,
    values: Vec<Vec<Vec<f64>>>,
}

fn checkpoint_path(dir: &Path, dataset: &str, model: &str, rate_bp: u64) -> std::path::PathBuf {
    dir.join(format!("{dataset}_{model}_{rate_bp}bp.json"))
}

fn sample_background(train: &Dataset, size: usize, seed: u64) -> Array2<f64> {
    use rand::seq::SliceRandom;
    let n = train.n_rows();
    if n <= size {
        return train.matrix().to_owned();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::rng(seed));
    idx.truncate(size);
    idx.sort_unstable();
    train.matrix().select(ndarray::Axis(0), &idx)
}

#[allow(clippy::too_many_arguments)]
fn explain_all(
    model: &TrainedModel,
    train: &Dataset,
    test: &Dataset,
    method: Method,
    shap_cfg: &ShapConfig,
    lime_cfg: &crate::explain::LimeConfig,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    match method {
        Method::Shap => {
            let background =
                sample_background(train, shap_cfg.background_size, rng::derive(seed, &["bg"]));
            let cfg = ShapConfig { seed, ..shap_cfg.clone() };
            let out = par::map_indexed(test.n_rows(), |i| {
                shap_permutation(model, background.view(), test.matrix().row(i), i, &cfg)
                    .map(|e| e.values)
            });
            out.into_iter().collect()
        }
        Method::Lime => {
            let summary = TrainSummary::fit(train);
            let cfg = crate::explain::LimeConfig { seed, ..lime_cfg.clone() };
            let out = par::map_indexed(test.n_rows(), |i| {
                lime_explain(model, &summary, test.matrix().row(i), i, &cfg).map(|e| e.values)
            });
            out.into_iter().collect()
        }
    }
}

/// Run the stability experiment for one model on one dataset.
///
/// When `checkpoint_dir` is given, each completed (rate) cell is written to
/// disk and picked up again on re-runs, so interrupted experiments resume
/// instead of restarting.
pub fn run_stability_experiment(
    dataset_name: &str,
    data: &Dataset,
    model_name: &str,
    cfg: &ExperimentConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<StabilityReport> {
    cfg.validate()?;
    let (family, loss) = parse_model_name(model_name)?;
    let st = &cfg.stability;
    let pi1 = data.pos_rate();
    if !(pi1 > 0.0 && pi1 < 1.0) {
        return Err(Error::Infeasible("dataset needs both classes".into()));
    }
    let priors = Some((1.0 - pi1, pi1));

    let split_seed = rng::derive(cfg.seed, &["stability", dataset_name, "split"]);
    let (pool_raw, test_raw) = split_stability_test(data, st.n_test, split_seed)?;

    // Preprocess once on the full training pool so the encoded feature space
    // (and therefore the attribution vectors) stays identical across refits.
    let prep = super::prepare(&pool_raw, &[&test_raw], cfg.lgd, priors)?;
    let pool = prep.train;
    let test = &prep.tests[0];
    let d = pool.x.ncols();

    let mut rows: Vec<InstanceStability> = Vec::new();
    for &rate in &st.rates {
        let rate_bp = (rate * 10_000.0).round() as u64;
        let cell_seed =
            rng::derive(cfg.seed, &["stability", dataset_name, model_name, &rate_bp.to_string()]);

        let mut values: Option<Vec<Vec<Vec<f64>>>> = None;
        if let Some(dir) = checkpoint_dir {
            let path = checkpoint_path(dir, dataset_name, model_name, rate_bp);
            if path.exists() {
                let text = std::fs::read_to_string(&path)?;
                let cell: CellCheckpoint = serde_json::from_str(&text)
                    .map_err(|e| Error::Validation(format!("checkpoint {}: {e}", path.display())))?;
                if cell.format_version == 1
                    && cell.model == model_name
                    && cell.values.len() == st.iterations
                {
                    values = Some(cell.values);
                }
            }
        }

        let values = match values {
            Some(v) => v,
            None => {
                let mut hyper = None;
                let mut all = Vec::with_capacity(st.iterations);
                for j in 0..st.iterations {
                    let iter_seed = rng::derive_n(cell_seed, &[j as u64]);
                    let train = resample_to_rate(&pool, rate, iter_seed)?;
                    let params = fit_cost_params(&train, cfg.lgd, priors)?;
                    let costs = build_cost_set(&train, &params);
                    // Hyperparameters are tuned on the first refit only and
                    // reused for the rest.
                    if hyper.is_none() {
                        let search = grid_search(
                            &train,
                            family,
                            loss,
                            &cfg.grids,
                            cfg.inner_folds,
                            cfg.lgd,
                            priors,
                            rng::derive(iter_seed, &["tune"]),
                        )?;
                        hyper = Some(search.best);
                    }
                    let spec = ModelSpec {
                        loss,
                        hyper: hyper.clone().unwrap(),
                        seed: rng::derive(iter_seed, &["fit"]),
                    };
                    let binding = CostBinding { set: &costs, pi1: params.pi1 };
                    let model = models::fit(&spec, train.matrix(), &train.y, Some(binding))?;
                    let attributions = explain_all(
                        &model,
                        &train,
                        test,
                        st.method,
                        &st.shap,
                        &st.lime,
                        rng::derive(iter_seed, &["explain"]),
                    )?;
                    all.push(attributions);
                }
                if let Some(dir) = checkpoint_dir {
                    std::fs::create_dir_all(dir)?;
                    let cell = CellCheckpoint {
                        format_version: 1,
                        model: model_name.to_string(),
                        rate_bp,
                        values: all.clone(),
                    };
                    let path = checkpoint_path(dir, dataset_name, model_name, rate_bp);
                    std::fs::write(
                        &path,
                        serde_json::to_string(&cell)
                            .map_err(|e| Error::Numeric(format!("checkpoint: {e}")))?,
                    )?;
                }
                all
            }
        };

        // Per-instance dispersion across the refit iterations.
        for i in 0..test.n_rows() {
            let mut m = Array2::<f64>::zeros((st.iterations, d));
            let mut rank_lists = Vec::with_capacity(st.iterations);
            for (j, per_iter) in values.iter().enumerate() {
                let v = &per_iter[i];
                for (k, &val) in v.iter().enumerate() {
                    m[[j, k]] = val;
                }
                rank_lists.push(rank_features(v));
            }
            let cov = cov_instance(m.view())?;
            let s = sra(&rank_lists, st.sra_depth.min(d))?;
            rows.push(InstanceStability { pi: rate, instance: i, cov, sra: s });
        }
    }

    Ok(StabilityReport::summarize(model_name, st.method.as_str(), rows))
}
