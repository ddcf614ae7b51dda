//! Seeded synthetic credit datasets for tests and benchmarks. The generator
//! plants a linear-plus-categorical signal in the features and ties loan
//! amounts to a partially observable latent factor, so amounts are
//! heterogeneous and cost-sensitive training has something to exploit.

use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{CatColumn, ColumnMeta, Dataset, DEFAULT_PROFIT_RATE};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_numeric: usize,
    /// Level count per categorical column.
    pub cat_levels: Vec<usize>,
    /// Target fraction of defaults (label 1).
    pub pos_rate: f64,
    /// Median loan amount.
    pub amount_scale: f64,
    /// Fraction of numeric cells blanked out to exercise imputation.
    pub missing_rate: f64,
    /// Observation noise on the latent default score; higher is harder.
    pub noise: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Small consumer-credit shape: 1000 rows, 20 predictors, 30% defaults.
    pub fn small(seed: u64) -> Self {
        SynthConfig {
            n_rows: 1000,
            n_numeric: 13,
            cat_levels: vec![4, 3, 5, 3, 4, 2, 3],
            pos_rate: 0.30,
            amount_scale: 3000.0,
            missing_rate: 0.0,
            noise: 1.0,
            seed,
        }
    }

    /// Home-equity shape: 5960 rows, 12 predictors, ~20% defaults, with
    /// missing numeric values.
    pub fn home_equity(seed: u64) -> Self {
        SynthConfig {
            n_rows: 5960,
            n_numeric: 10,
            cat_levels: vec![6, 3],
            pos_rate: 0.1995,
            amount_scale: 18000.0,
            missing_rate: 0.05,
            noise: 1.0,
            seed,
        }
    }

    /// Tiny fast variant for unit tests.
    pub fn tiny(seed: u64) -> Self {
        SynthConfig {
            n_rows: 200,
            n_numeric: 5,
            cat_levels: vec![3],
            pos_rate: 0.3,
            amount_scale: 1000.0,
            missing_rate: 0.0,
            noise: 0.8,
            seed,
        }
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    let n = cfg.n_rows;
    let d = cfg.n_numeric;
    if n == 0 || d == 0 {
        return Err(Error::Config("synthetic dataset needs rows and numeric features".into()));
    }
    if !(cfg.pos_rate > 0.0 && cfg.pos_rate < 1.0) {
        return Err(Error::Config("pos_rate must be in (0, 1)".into()));
    }
    let mut r = rng::rng(rng::derive(cfg.seed, &["synth"]));

    // Feature weights on the latent default score.
    let w: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0f64..1.0)).collect();
    // Per-level effects for each categorical column.
    let cat_effects: Vec<Vec<f64>> = cfg
        .cat_levels
        .iter()
        .map(|&l| (0..l).map(|_| r.gen_range(-0.8f64..0.8)).collect())
        .collect();

    let mut x = Array2::<f64>::zeros((n, d));
    let mut cat_idx: Vec<Vec<usize>> = vec![Vec::with_capacity(n); cfg.cat_levels.len()];
    let mut score = vec![0.0f64; n];
    let mut amount = vec![0.0f64; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..d {
            let v: f64 = StandardNormal.sample(&mut r);
            x[[i, j]] = v;
            s += w[j] * v;
        }
        for (c, effects) in cat_effects.iter().enumerate() {
            let lvl = r.gen_range(0..effects.len());
            cat_idx[c].push(lvl);
            s += effects[lvl];
        }
        // Latent exposure drives loan size and nudges default risk, so
        // expensive mistakes concentrate on identifiable rows.
        let shock: f64 = StandardNormal.sample(&mut r);
        let exposure = 0.7 * x[[i, 0]] + 0.7 * shock;
        amount[i] = cfg.amount_scale * (0.6 * exposure).exp();
        s += 0.35 * exposure;
        let eps: f64 = StandardNormal.sample(&mut r);
        score[i] = s + cfg.noise * eps;
    }

    // Exact positive count: label the highest-scoring rows as defaults.
    let n_pos = ((cfg.pos_rate * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].partial_cmp(&score[a]).unwrap().then(a.cmp(&b)));
    let mut y = vec![0u8; n];
    for &i in &order[..n_pos] {
        y[i] = 1;
    }

    if cfg.missing_rate > 0.0 {
        for i in 0..n {
            for j in 0..d {
                if r.gen::<f64>() < cfg.missing_rate {
                    x[[i, j]] = f64::NAN;
                }
            }
        }
    }

    let columns = (0..d).map(|j| ColumnMeta::numeric(format!("num{j}"))).collect();
    let cats = cat_idx
        .into_iter()
        .enumerate()
        .map(|(c, idx)| CatColumn {
            name: format!("cat{c}"),
            values: idx.into_iter().map(|l| format!("l{l}")).collect(),
        })
        .collect();
    let revenue = amount.iter().map(|a| a * DEFAULT_PROFIT_RATE).collect();
    let ds = Dataset { columns, x, cats, y, amount, revenue };
    ds.validate()?;
    Ok(ds)
}

/// Write an unencoded dataset back out as CSV (label, amount, then
/// features); NaN cells become empty fields.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["label".to_string(), "amount".to_string()];
    header.extend(ds.columns.iter().map(|c| c.name.clone()));
    header.extend(ds.cats.iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for i in 0..ds.n_rows() {
        let mut rec = vec![ds.y[i].to_string(), format!("{:.4}", ds.amount[i])];
        for j in 0..ds.x.ncols() {
            let v = ds.x[[i, j]];
            rec.push(if v.is_nan() { String::new() } else { format!("{v:.6}") });
        }
        for c in &ds.cats {
            rec.push(c.values[i].clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
