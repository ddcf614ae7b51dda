//! The eight classifier variants: {logit, boost, forest, net} trained with
//! cross-entropy or the cost-sensitive AEC objective.

mod boost;
mod forest;
mod logit;
mod net;
pub(crate) mod tree;

pub use boost::{fit_boost, BoostModel, BoostParams};
pub use forest::{best_cost_split, fit_forest, ForestModel, ForestParams};
pub use logit::{fit_logit, LogitModel, LogitParams, Penalty};
pub use net::{fit_net, NetModel, NetParams};

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::costs::CostSet;
use crate::losses::LossKind;
use crate::{Error, Result};

/// Model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logit,
    Boost,
    Forest,
    Net,
}

/// Family-specific hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HyperParams {
    Logit(LogitParams),
    Boost(BoostParams),
    Forest(ForestParams),
    Net(NetParams),
}

impl HyperParams {
    pub fn family(&self) -> Family {
        match self {
            HyperParams::Logit(_) => Family::Logit,
            HyperParams::Boost(_) => Family::Boost,
            HyperParams::Forest(_) => Family::Forest,
            HyperParams::Net(_) => Family::Net,
        }
    }
}

/// Full training specification for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub loss: LossKind,
    pub hyper: HyperParams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        self.hyper.family()
    }

    /// Conventional name: cost-sensitive variants get a `cs` prefix.
    pub fn name(&self) -> String {
        let base = match self.family() {
            Family::Logit => "logit",
            Family::Boost => "boost",
            Family::Forest => "forest",
            Family::Net => "net",
        };
        if self.loss.is_cost_sensitive() {
            format!("cs{base}")
        } else {
            base.to_string()
        }
    }
}

/// Cost information a cost-sensitive trainer needs: the per-row cost set of
/// the training rows plus the (fixed) prior default rate used for baselines.
#[derive(Debug, Clone, Copy)]
pub struct CostBinding<'a> {
    pub set: &'a CostSet,
    pub pi1: f64,
}

/// A fitted classifier. Scoring is deterministic given the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Logit(LogitModel),
    Boost(BoostModel),
    Forest(ForestModel),
    Net(NetModel),
}

/// Serialization wrapper with a format version for experiment resumption.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: TrainedModel,
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        match self {
            TrainedModel::Logit(_) => Family::Logit,
            TrainedModel::Boost(_) => Family::Boost,
            TrainedModel::Forest(_) => Family::Forest,
            TrainedModel::Net(_) => Family::Net,
        }
    }

    pub fn loss(&self) -> LossKind {
        match self {
            TrainedModel::Logit(m) => m.loss,
            TrainedModel::Boost(m) => m.loss,
            TrainedModel::Forest(m) => m.loss,
            TrainedModel::Net(m) => m.loss,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Logit(m) => m.weights.len(),
            TrainedModel::Boost(m) => m.n_features,
            TrainedModel::Forest(m) => m.n_features,
            TrainedModel::Net(m) => m.n_features(),
        }
    }

    /// Score one row.
    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        match self {
            TrainedModel::Logit(m) => m.predict_one(x),
            TrainedModel::Boost(m) => m.predict_one(x),
            TrainedModel::Forest(m) => m.predict_one(x),
            TrainedModel::Net(m) => m.predict_one(x),
        }
    }

    /// Score a matrix of rows; columns must match the training schema.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Schema(format!(
                "expected {} feature columns, got {}",
                self.n_features(),
                x.ncols()
            )));
        }
        Ok((0..x.nrows()).map(|i| self.predict_one(x.row(i))).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile { format_version: 1, model: self.clone() };
        let text = serde_json::to_string(&file)
            .map_err(|e| Error::Numeric(format!("model serialization: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TrainedModel> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Validation(format!("model file: {e}")))?;
        if file.format_version != 1 {
            return Err(Error::Validation(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        Ok(file.model)
    }
}

/// Train a model per its spec. AEC-trained models require cost information.
pub fn fit(
    spec: &ModelSpec,
    x: ArrayView2<'_, f64>,
    y: &[u8],
    cost: Option<CostBinding<'_>>,
) -> Result<TrainedModel> {
    if spec.loss.is_cost_sensitive() && cost.is_none() {
        return Err(Error::Validation("cost-sensitive training requires a cost set".into()));
    }
    match &spec.hyper {
        HyperParams::Logit(p) => fit_logit(x, y, cost, p, spec.loss, spec.seed),
        HyperParams::Boost(p) => fit_boost(x, y, cost, p, spec.loss, spec.seed),
        HyperParams::Forest(p) => fit_forest(x, y, cost, p, spec.loss, spec.seed),
        HyperParams::Net(p) => fit_net(x, y, cost, p, spec.loss, spec.seed),
    }
}

/// Expected-cost-minimizing hard classification: predict default when the
/// score exceeds the instance threshold `c_fp / (c_fp + c_fn)`; ties and
/// zero-cost rows fall back to 0 and 0.5 respectively.
pub fn bayes_classify(s: &[f64], costs: &CostSet) -> Result<Vec<u8>> {
    if s.len() != costs.len() {
        return Err(Error::Validation("score/cost length mismatch".into()));
    }
    Ok(s.iter()
        .enumerate()
        .map(|(i, &si)| {
            let denom = costs.c_fp[i] + costs.c_fn[i];
            let t = if denom > 0.0 { costs.c_fp[i] / denom } else { 0.5 };
            u8::from(si > t)
        })
        .collect())
}
