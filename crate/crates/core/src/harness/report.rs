//! Report emission. All writers are deterministic functions of their inputs
//! (fixed row order, fixed float formatting, no timestamps), so re-running
//! an experiment reproduces the output files byte for byte.

use std::path::Path;

use serde::Serialize;

use crate::metrics::{friedman_and_ranks, posthoc_vs_best, FoldMetrics};
use crate::stability::StabilityReport;
use crate::{Error, Result};

use super::bench::{BenchReport, NULL_MODEL};
use super::config::ExperimentConfig;

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.6}")
    }
}

/// Per-model metric means and standard deviations for one dataset.
pub fn write_bench_csv(report: &BenchReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["model".to_string()];
    for name in FoldMetrics::NAMES {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_sd"));
    }
    w.write_record(&header)?;
    for r in &report.results {
        let s = &r.summary;
        let cells = [s.auc, s.ap, s.brier, s.rel_aec, s.savings];
        let mut rec = vec![r.model.clone()];
        for c in cells {
            rec.push(fmt(c.mean));
            rec.push(fmt(c.sd));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Cross-dataset model comparison: average ranks per metric with the
/// Friedman test statistic and Hommel-adjusted post-hoc p-values against
/// the best-ranked model. The null model is excluded from ranking.
pub fn write_rank_csv(reports: &[BenchReport], path: &Path) -> Result<()> {
    if reports.len() < 2 {
        return Err(Error::Validation("ranking needs >= 2 datasets".into()));
    }
    let models: Vec<String> = reports[0]
        .results
        .iter()
        .map(|r| r.model.clone())
        .filter(|m| m != NULL_MODEL)
        .collect();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "model", "avg_rank", "chi2", "p_value", "p_vs_best"])?;
    // Brier is an error; everything else is a gain.
    let higher_is_better = [true, true, false, true, true];
    for (mi, metric) in FoldMetrics::NAMES.iter().enumerate() {
        let mut table = Vec::with_capacity(models.len());
        for m in &models {
            let mut row = Vec::with_capacity(reports.len());
            for rep in reports {
                let res = rep
                    .result(m)
                    .ok_or_else(|| Error::Validation(format!("model {m} missing in {}", rep.dataset)))?;
                let s = &res.summary;
                let v = [s.auc.mean, s.ap.mean, s.brier.mean, s.rel_aec.mean, s.savings.mean][mi];
                row.push(v);
            }
            table.push(row);
        }
        let fr = friedman_and_ranks(&table, higher_is_better[mi])?;
        let posthoc = posthoc_vs_best(&fr.avg_ranks, reports.len())?;
        for (k, m) in models.iter().enumerate() {
            w.write_record([
                metric.to_string(),
                m.clone(),
                fmt(fr.avg_ranks[k]),
                fmt(fr.chi2),
                fmt(fr.p_value),
                fmt(posthoc[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Stability summaries per resampled default rate.
pub fn write_stability_csv(report: &StabilityReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "method", "metric", "pi", "mean", "sd", "median"])?;
    for (name, rows) in [("cov", &report.cov_summary), ("sra", &report.sra_summary)] {
        for s in rows {
            w.write_record([
                report.model.clone(),
                report.method.clone(),
                name.to_string(),
                fmt(s.pi),
                fmt(s.mean),
                fmt(s.sd),
                fmt(s.median),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Raw per-instance stability rows.
pub fn write_instance_csv(report: &StabilityReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "method", "pi", "instance", "cov", "sra"])?;
    for r in &report.per_instance {
        w.write_record([
            report.model.clone(),
            report.method.clone(),
            fmt(r.pi),
            r.instance.to_string(),
            r.cov.map(fmt).unwrap_or_else(|| "nan".into()),
            fmt(r.sra),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    format_version: u32,
    config: &'a ExperimentConfig,
    outputs: Vec<String>,
}

/// Machine-readable record of what an experiment run produced and under
/// which configuration.
pub fn write_manifest(cfg: &ExperimentConfig, outputs: &[&Path], path: &Path) -> Result<()> {
    let mut names: Vec<String> =
        outputs.iter().map(|p| p.to_string_lossy().into_owned()).collect();
    names.sort();
    let m = Manifest { format_version: 1, config: cfg, outputs: names };
    let text = serde_json::to_string_pretty(&m)
        .map_err(|e| Error::Numeric(format!("manifest: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}
