//! Instance-dependent cost-sensitive (IDCS) credit scoring toolkit.
//!
//! Provides the eight classifier variants ({logit, boost, forest, net} with
//! cross-entropy or cost-sensitive objectives), per-instance cost matrices,
//! post-hoc explainers (permutation SHAP and LIME), explanation stability
//! metrics (CoV, SRA), and the two experiment harnesses: a nested
//! cross-validation performance benchmark and a resampling stability study.

pub mod costs;
pub mod data;
pub mod error;
pub mod explain;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod models;
pub mod par;
pub mod rng;
pub mod stability;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
