//! Experiment configuration: TOML files plus dotted-path command-line
//! overrides. Unknown keys are rejected so typos fail loudly instead of
//! silently running the default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::costs::DEFAULT_LGD;
use crate::explain::{LimeConfig, Method, ShapConfig};
use crate::losses::LossKind;
use crate::models::Family;
use crate::{Error, Result};

use super::grid::GridSpec;

pub const ALL_MODELS: [&str; 8] =
    ["logit", "cslogit", "boost", "csboost", "forest", "csforest", "net", "csnet"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub lgd: f64,
    pub outer_folds: usize,
    pub inner_folds: usize,
    /// Model names to run; `cs` prefix selects the cost-sensitive objective.
    pub models: Vec<String>,
    pub grids: GridSpec,
    pub stability: StabilityConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            lgd: DEFAULT_LGD,
            outer_folds: 5,
            inner_folds: 5,
            models: ALL_MODELS.iter().map(|s| s.to_string()).collect(),
            grids: GridSpec::default(),
            stability: StabilityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    /// Resampled training default rates.
    pub rates: Vec<f64>,
    /// Refit iterations per rate; the first one also tunes hyperparameters.
    pub iterations: usize,
    /// Held-out instances to explain.
    pub n_test: usize,
    /// Top-of-ranking depth for the rank agreement metric.
    pub sra_depth: usize,
    pub method: Method,
    pub shap: ShapConfig,
    pub lime: LimeConfig,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            rates: vec![0.01, 0.03, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            iterations: 25,
            n_test: 300,
            sra_depth: 10,
            method: Method::Shap,
            shap: ShapConfig::default(),
            lime: LimeConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Load with `key.path=value` overrides applied on top of the file (or
    /// the defaults when no file is given).
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let base = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        let mut value: toml::Value = toml::from_str(&base)
            .map_err(|e| Error::Config(format!("config parse: {e}")))?;
        for ov in overrides {
            let (key, val) = ov
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{ov}' must be key=value")))?;
            apply_override(&mut value, key.trim(), val.trim())?;
        }
        // Round-trip through the typed struct; deny_unknown_fields rejects
        // misspelled keys from either the file or an override.
        let merged: ExperimentConfig = value
            .try_into()
            .map_err(|e| Error::Config(format!("config: {e}")))?;
        Ok(merged)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_folds < 2 || self.inner_folds < 2 {
            return Err(Error::Config("fold counts must be >= 2".into()));
        }
        for m in &self.models {
            parse_model_name(m)?;
        }
        if self.stability.rates.is_empty() || self.stability.iterations < 2 {
            return Err(Error::Config("stability needs rates and >= 2 iterations".into()));
        }
        Ok(())
    }
}

/// Set a dotted-path key inside a TOML tree, parsing the value as TOML
/// (falling back to a string). Intermediate tables are created on demand;
/// setting a non-table segment's child is an error.
pub fn apply_override(root: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut node = root;
    for seg in &segments[..segments.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("'{seg}' in '{key}' is not a table")))?;
        node = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let leaf = segments[segments.len() - 1];
    let parsed: toml::Value = match toml::from_str::<toml::Value>(&format!("v = {raw}")) {
        Ok(toml::Value::Table(t)) => t.get("v").cloned().unwrap(),
        _ => toml::Value::String(raw.to_string()),
    };
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("'{key}' parent is not a table")))?;
    table.insert(leaf.to_string(), parsed);
    Ok(())
}

/// Map a conventional model name to its family and training objective.
pub fn parse_model_name(name: &str) -> Result<(Family, LossKind)> {
    let (loss, base) = match name.strip_prefix("cs") {
        Some(rest) => (LossKind::Aec, rest),
        None => (LossKind::CrossEntropy, name),
    };
    let family = match base {
        "logit" => Family::Logit,
        "boost" => Family::Boost,
        "forest" => Family::Forest,
        "net" => Family::Net,
        _ => return Err(Error::Config(format!("unknown model '{name}'"))),
    };
    Ok((family, loss))
}
