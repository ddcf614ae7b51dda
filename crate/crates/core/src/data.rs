//! Tabular credit dataset handling: CSV loading, one-hot encoding,
//! imputation, standardization, stratified splits and class-imbalance
//! resampling. All operations are pure functions of their inputs and a seed.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// Default profit fraction used to synthesize per-row lost revenue
/// `r_i = A_i * PROFIT_RATE` when the schema names no revenue column.
pub const DEFAULT_PROFIT_RATE: f64 = 0.2644;

/// Largest default rate used when resampling; resampled set size is
/// `floor(#minority / MAX_RESAMPLE_RATE)` so all rates share one size.
pub const MAX_RESAMPLE_RATE: f64 = 0.3;

/// Column-role map consumed by [`load_csv`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schema {
    /// Name of the binary label column (1 = default).
    pub label: String,
    /// Name of the loan amount column.
    pub amount: String,
    /// Optional lost-revenue column; synthesized from `amount` if absent.
    #[serde(default)]
    pub revenue: Option<String>,
    /// Columns to treat as categorical regardless of content.
    #[serde(default)]
    pub categoricals: Vec<String>,
    /// Field delimiter, default ','.
    #[serde(default)]
    pub delimiter: Option<char>,
    /// Profit fraction for synthesized revenue.
    #[serde(default)]
    pub profit_rate: Option<f64>,
}

impl Schema {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

/// Metadata for one encoded (numeric) column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    /// `Some((source, level))` if this is a one-hot indicator column;
    /// indicator columns are excluded from standardization.
    pub indicator: Option<(String, String)>,
}

impl ColumnMeta {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self { name: name.into(), indicator: None }
    }
}

/// A raw categorical column awaiting one-hot encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct CatColumn {
    pub name: String,
    pub values: Vec<String>,
}

/// A credit dataset. `x` holds the numeric columns (possibly with NaN for
/// missing values before imputation); `cats` holds categorical columns not
/// yet one-hot encoded.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<ColumnMeta>,
    pub x: Array2<f64>,
    pub cats: Vec<CatColumn>,
    /// Binary labels, 1 = default.
    pub y: Vec<u8>,
    /// Per-row loan amount, strictly positive.
    pub amount: Vec<f64>,
    /// Per-row lost revenue, non-negative.
    pub revenue: Vec<f64>,
}

/// Summary record emitted after loading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub d: usize,
    pub pos_rate: f64,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    /// Number of predictor columns (numeric + raw categorical).
    pub fn n_features(&self) -> usize {
        self.x.ncols() + self.cats.len()
    }

    pub fn pos_rate(&self) -> f64 {
        if self.y.is_empty() {
            return 0.0;
        }
        self.y.iter().map(|&v| v as usize).sum::<usize>() as f64 / self.y.len() as f64
    }

    pub fn n_pos(&self) -> usize {
        self.y.iter().map(|&v| v as usize).sum()
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary { rows: self.n_rows(), d: self.n_features(), pos_rate: self.pos_rate() }
    }

    /// Numeric view; panics if categorical columns are still unencoded.
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        assert!(self.cats.is_empty(), "dataset has unencoded categorical columns");
        self.x.view()
    }

    /// Validate label/amount/revenue invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if self.x.nrows() != n || self.amount.len() != n || self.revenue.len() != n {
            return Err(Error::Validation("row count mismatch across fields".into()));
        }
        for c in &self.cats {
            if c.values.len() != n {
                return Err(Error::Validation(format!("categorical column {} length mismatch", c.name)));
            }
        }
        if let Some(i) = self.amount.iter().position(|&a| !(a > 0.0)) {
            return Err(Error::Validation(format!("amount must be > 0 (row {i})")));
        }
        if let Some(i) = self.revenue.iter().position(|&r| !(r >= 0.0)) {
            return Err(Error::Validation(format!("revenue must be >= 0 (row {i})")));
        }
        Ok(())
    }

    /// Row subset in the given index order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let x = self.x.select(Axis(0), idx);
        let cats = self
            .cats
            .iter()
            .map(|c| CatColumn {
                name: c.name.clone(),
                values: idx.iter().map(|&i| c.values[i].clone()).collect(),
            })
            .collect();
        Dataset {
            columns: self.columns.clone(),
            x,
            cats,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            amount: idx.iter().map(|&i| self.amount[i]).collect(),
            revenue: idx.iter().map(|&i| self.revenue[i]).collect(),
        }
    }
}

fn parse_num(field: &str) -> Option<f64> {
    let t = field.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok()
}

/// Load a UTF-8 CSV with header row according to `schema`.
///
/// Rows with a missing label or amount are dropped (counted in the log).
/// Non-binary label values are a hard validation error. Column kinds are
/// taken from `schema.categoricals`; remaining columns are numeric if every
/// non-empty value parses as a number, otherwise categorical.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let delim = schema.delimiter.unwrap_or(',') as u8;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .flexible(false)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.trim().to_string()).collect();

    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing required column '{name}'")))
    };
    let label_idx = find(&schema.label)?;
    let amount_idx = find(&schema.amount)?;
    let revenue_idx = match &schema.revenue {
        Some(name) => Some(find(name)?),
        None => None,
    };
    for c in &schema.categoricals {
        find(c)?;
    }

    let special: Vec<usize> = [Some(label_idx), Some(amount_idx), revenue_idx]
        .into_iter()
        .flatten()
        .collect();
    let feature_idx: Vec<usize> =
        (0..headers.len()).filter(|i| !special.contains(i)).collect();

    // First pass: collect raw records, dropping rows without label or amount.
    let mut raw: Vec<Vec<String>> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        let fields: Vec<String> = record.iter().map(|s| s.to_string()).collect();
        if fields.len() != headers.len() {
            return Err(Error::Validation(format!(
                "row has {} fields, expected {}",
                fields.len(),
                headers.len()
            )));
        }
        let label_missing = fields[label_idx].trim().is_empty();
        let amount_missing = parse_num(&fields[amount_idx]).is_none();
        if label_missing || amount_missing {
            dropped += 1;
            continue;
        }
        raw.push(fields);
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} rows with missing label or amount");
    }
    if raw.is_empty() {
        return Err(Error::Validation("no usable rows in input".into()));
    }

    // Decide column kinds.
    let mut is_cat = vec![false; headers.len()];
    for &fi in &feature_idx {
        if schema.categoricals.iter().any(|c| c == &headers[fi]) {
            is_cat[fi] = true;
        } else {
            let numeric = raw
                .iter()
                .all(|row| row[fi].trim().is_empty() || parse_num(&row[fi]).is_some());
            is_cat[fi] = !numeric;
        }
    }

    let n = raw.len();
    let mut y = Vec::with_capacity(n);
    let mut amount = Vec::with_capacity(n);
    let mut revenue = Vec::with_capacity(n);
    for row in &raw {
        let lv = parse_num(&row[label_idx])
            .ok_or_else(|| Error::Validation(format!("non-numeric label '{}'", row[label_idx])))?;
        if lv == 0.0 {
            y.push(0u8);
        } else if lv == 1.0 {
            y.push(1u8);
        } else {
            return Err(Error::Validation(format!("non-binary label value '{}'", row[label_idx])));
        }
        let a = parse_num(&row[amount_idx]).expect("filtered above");
        amount.push(a);
        match revenue_idx {
            Some(ri) => {
                let r = parse_num(&row[ri]).ok_or_else(|| {
                    Error::Validation(format!("missing or non-numeric revenue '{}'", row[ri]))
                })?;
                revenue.push(r);
            }
            None => {
                let pr = schema.profit_rate.unwrap_or(DEFAULT_PROFIT_RATE);
                revenue.push(a * pr);
            }
        }
    }

    let num_cols: Vec<usize> = feature_idx.iter().copied().filter(|&i| !is_cat[i]).collect();
    let cat_cols: Vec<usize> = feature_idx.iter().copied().filter(|&i| is_cat[i]).collect();

    let mut x = Array2::<f64>::zeros((n, num_cols.len()));
    for (j, &ci) in num_cols.iter().enumerate() {
        for (i, row) in raw.iter().enumerate() {
            x[[i, j]] = parse_num(&row[ci]).unwrap_or(f64::NAN);
        }
    }
    let columns = num_cols.iter().map(|&ci| ColumnMeta::numeric(headers[ci].clone())).collect();
    let cats = cat_cols
        .iter()
        .map(|&ci| CatColumn {
            name: headers[ci].clone(),
            values: raw.iter().map(|row| row[ci].trim().to_string()).collect(),
        })
        .collect();

    let ds = Dataset { columns, x, cats, y, amount, revenue };
    ds.validate()?;
    if let Ok(line) = serde_json::to_string(&ds.summary()) {
        log::info!("{line}");
    }
    Ok(ds)
}

/// Fitted one-hot encoding: source column -> ordered list of levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneHotMap {
    /// (source column, levels in first-seen order).
    pub levels: Vec<(String, Vec<String>)>,
}

impl OneHotMap {
    fn fit(cats: &[CatColumn]) -> Self {
        let levels = cats
            .iter()
            .map(|c| {
                let mut seen = Vec::new();
                for v in &c.values {
                    if !seen.contains(v) {
                        seen.push(v.clone());
                    }
                }
                (c.name.clone(), seen)
            })
            .collect();
        OneHotMap { levels }
    }

    /// Apply the stored mapping; unseen levels map to an all-zero indicator
    /// block and are counted in the returned warning total.
    pub fn transform(&self, d: &Dataset) -> (Dataset, usize) {
        let n = d.n_rows();
        let mut blocks: Vec<(Vec<ColumnMeta>, Array2<f64>)> = Vec::new();
        let mut unseen = 0usize;
        for (name, levels) in &self.levels {
            let col = d
                .cats
                .iter()
                .find(|c| &c.name == name)
                .unwrap_or_else(|| panic!("missing categorical column '{name}'"));
            let mut block = Array2::<f64>::zeros((n, levels.len()));
            for (i, v) in col.values.iter().enumerate() {
                match levels.iter().position(|l| l == v) {
                    Some(j) => block[[i, j]] = 1.0,
                    None => unseen += 1,
                }
            }
            let metas = levels
                .iter()
                .map(|l| ColumnMeta {
                    name: format!("{name}={l}"),
                    indicator: Some((name.clone(), l.clone())),
                })
                .collect();
            blocks.push((metas, block));
        }

        let total_cols = d.x.ncols() + blocks.iter().map(|(_, b)| b.ncols()).sum::<usize>();
        let mut x = Array2::<f64>::zeros((n, total_cols));
        let mut columns = d.columns.clone();
        x.slice_mut(ndarray::s![.., 0..d.x.ncols()]).assign(&d.x);
        let mut at = d.x.ncols();
        for (metas, block) in blocks {
            x.slice_mut(ndarray::s![.., at..at + block.ncols()]).assign(&block);
            columns.extend(metas);
            at += block.ncols();
        }
        let out = Dataset {
            columns,
            x,
            cats: Vec::new(),
            y: d.y.clone(),
            amount: d.amount.clone(),
            revenue: d.revenue.clone(),
        };
        (out, unseen)
    }
}

/// One-hot encode all categorical columns, returning the encoded dataset and
/// the fitted map for transforming further data with the same columns.
pub fn one_hot_encode(d: &Dataset) -> (Dataset, OneHotMap) {
    let map = OneHotMap::fit(&d.cats);
    let (out, _) = map.transform(d);
    (out, map)
}

/// Median imputation fitted on training data. Columns that contain missing
/// values in the training split get a companion missing-indicator column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Imputer {
    /// Per numeric column: training median (0 when the column is all-NaN).
    pub medians: Vec<f64>,
    /// Column indices that receive a missing-indicator column.
    pub indicator_for: Vec<usize>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

impl Imputer {
    pub fn fit(train: &Dataset) -> Self {
        let d = train.x.ncols();
        let mut medians = Vec::with_capacity(d);
        let mut indicator_for = Vec::new();
        for j in 0..d {
            let col: Vec<f64> =
                train.x.column(j).iter().copied().filter(|v| v.is_finite()).collect();
            if col.len() < train.n_rows() {
                indicator_for.push(j);
            }
            medians.push(median(col));
        }
        Imputer { medians, indicator_for }
    }

    pub fn transform(&self, d: &Dataset) -> Dataset {
        let n = d.n_rows();
        let base = d.x.ncols();
        assert_eq!(base, self.medians.len(), "imputer fitted on different width");
        let mut x = Array2::<f64>::zeros((n, base + self.indicator_for.len()));
        let mut columns = d.columns.clone();
        for j in 0..base {
            for i in 0..n {
                let v = d.x[[i, j]];
                x[[i, j]] = if v.is_finite() { v } else { self.medians[j] };
            }
        }
        for (k, &j) in self.indicator_for.iter().enumerate() {
            let name = format!("{}__missing", d.columns[j].name);
            for i in 0..n {
                x[[i, base + k]] = if d.x[[i, j]].is_finite() { 0.0 } else { 1.0 };
            }
            columns.push(ColumnMeta {
                name: name.clone(),
                indicator: Some((d.columns[j].name.clone(), "__missing".into())),
            });
        }
        Dataset {
            columns,
            x,
            cats: d.cats.clone(),
            y: d.y.clone(),
            amount: d.amount.clone(),
            revenue: d.revenue.clone(),
        }
    }
}

/// Fitted per-column affine map `(x - mean) / scale`. Indicator columns are
/// passed through untouched; zero-variance columns are centered only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Columns the map applies to (non-indicator columns).
    pub applies: Vec<bool>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Self {
        let n = train.n_rows() as f64;
        let d = train.x.ncols();
        let mut means = vec![0.0; d];
        let mut scales = vec![1.0; d];
        let mut applies = vec![false; d];
        for j in 0..d {
            if train.columns[j].indicator.is_some() {
                continue;
            }
            applies[j] = true;
            let col = train.x.column(j);
            let mean = col.sum() / n;
            let var = if n > 1.0 {
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            means[j] = mean;
            scales[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Standardizer { means, scales, applies }
    }

    pub fn transform(&self, d: &Dataset) -> Dataset {
        assert_eq!(d.x.ncols(), self.means.len(), "standardizer fitted on different width");
        let mut x = d.x.clone();
        for j in 0..x.ncols() {
            if !self.applies[j] {
                continue;
            }
            for v in x.column_mut(j) {
                *v = (*v - self.means[j]) / self.scales[j];
            }
        }
        Dataset {
            columns: d.columns.clone(),
            x,
            cats: d.cats.clone(),
            y: d.y.clone(),
            amount: d.amount.clone(),
            revenue: d.revenue.clone(),
        }
    }
}

/// Standardize `train` and apply the same map to `others`.
pub fn standardize(train: &Dataset, others: &[&Dataset]) -> (Dataset, Vec<Dataset>, Standardizer) {
    let std = Standardizer::fit(train);
    let t = std.transform(train);
    let o = others.iter().map(|d| std.transform(d)).collect();
    (t, o, std)
}

/// Round half up for non-negative values.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

fn class_indices(y: &[u8]) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &v) in y.iter().enumerate() {
        if v == 1 {
            pos.push(i)
        } else {
            neg.push(i)
        }
    }
    (pos, neg)
}

/// Stratified k-fold split over labels. Returns `(train, test)` index pairs;
/// test folds are disjoint, cover all rows, and per-fold positive counts
/// differ by at most one.
pub fn stratified_kfold(y: &[u8], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::Validation("k must be >= 2".into()));
    }
    let (mut pos, mut neg) = class_indices(y);
    if pos.len() < k || neg.len() < k {
        return Err(Error::Infeasible(format!(
            "each class needs >= k members (pos={}, neg={}, k={k})",
            pos.len(),
            neg.len()
        )));
    }
    let mut r = rng::rng(rng::derive(seed, &["stratified_kfold"]));
    pos.shuffle(&mut r);
    neg.shuffle(&mut r);

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    // Deal each class round-robin; negatives start where positives left off
    // so the remainders land on different folds where possible.
    for (i, &idx) in pos.iter().enumerate() {
        folds[i % k].push(idx);
    }
    let offset = pos.len() % k;
    for (i, &idx) in neg.iter().enumerate() {
        folds[(offset + i) % k].push(idx);
    }

    let n = y.len();
    let mut out = Vec::with_capacity(k);
    for f in &mut folds {
        f.sort_unstable();
    }
    for i in 0..k {
        let test = folds[i].clone();
        let mut in_test = vec![false; n];
        for &t in &test {
            in_test[t] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&j| !in_test[j]).collect();
        out.push((train, test));
    }
    Ok(out)
}

/// Split off a stratified test set of exactly `n_test` rows whose positive
/// rate matches the full dataset's within one row; the rest is training data.
pub fn split_stability_test(d: &Dataset, n_test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    if n_test == 0 || n_test >= d.n_rows() {
        return Err(Error::Infeasible(format!(
            "n_test must be in 1..{} (got {n_test})",
            d.n_rows()
        )));
    }
    let (mut pos, mut neg) = class_indices(&d.y);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Infeasible("both classes must be present".into()));
    }
    let n_pos_test = round_half_up(d.pos_rate() * n_test as f64)
        .clamp(1, n_test.saturating_sub(1))
        .min(pos.len());
    let n_neg_test = n_test - n_pos_test;
    if n_neg_test > neg.len() {
        return Err(Error::Infeasible("not enough negative rows for test split".into()));
    }
    let mut r = rng::rng(rng::derive(seed, &["split_stability_test"]));
    pos.shuffle(&mut r);
    neg.shuffle(&mut r);
    let mut test: Vec<usize> = pos[..n_pos_test].iter().chain(neg[..n_neg_test].iter()).copied().collect();
    test.sort_unstable();
    let mut in_test = vec![false; d.n_rows()];
    for &t in &test {
        in_test[t] = true;
    }
    let train: Vec<usize> = (0..d.n_rows()).filter(|&i| !in_test[i]).collect();
    Ok((d.subset(&train), d.subset(&test)))
}

/// Resample the training set to default rate `pi`. Output size is the fixed
/// `floor(#minority / 0.3)` for every rate; positives and negatives are drawn
/// without replacement, and at `pi = 0.3` all minority rows are included.
pub fn resample_to_rate(train: &Dataset, pi: f64, seed: u64) -> Result<Dataset> {
    if !(pi > 0.0 && pi <= MAX_RESAMPLE_RATE) {
        return Err(Error::Validation(format!(
            "pi must be in (0, {MAX_RESAMPLE_RATE}] (got {pi})"
        )));
    }
    let (mut pos, mut neg) = class_indices(&train.y);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Infeasible("both classes required for resampling".into()));
    }
    let size = (pos.len() as f64 / MAX_RESAMPLE_RATE).floor() as usize;
    let n_pos = round_half_up(pi * size as f64).clamp(1, pos.len());
    let n_neg = size - n_pos;
    if n_neg > neg.len() {
        return Err(Error::Infeasible(format!(
            "need {n_neg} majority rows but only {} available",
            neg.len()
        )));
    }
    let mut r = rng::rng(rng::derive_n(seed, &[(pi * 10_000.0).round() as u64]));
    pos.shuffle(&mut r);
    neg.shuffle(&mut r);
    let mut idx: Vec<usize> = pos[..n_pos].iter().chain(neg[..n_neg].iter()).copied().collect();
    idx.sort_unstable();
    Ok(train.subset(&idx))
}

/// Per-feature summary used by the LIME perturbation sampler.
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// One-hot blocks: (column indices of the block, level sampling weights).
    pub cat_blocks: Vec<(Vec<usize>, Vec<f64>)>,
    /// Columns not belonging to any block.
    pub numeric_cols: Vec<usize>,
}

impl TrainSummary {
    pub fn fit(train: &Dataset) -> Self {
        assert!(train.cats.is_empty(), "encode categoricals before summarizing");
        let n = train.n_rows() as f64;
        let d = train.x.ncols();
        let mut means = vec![0.0; d];
        let mut sds = vec![1.0; d];
        for j in 0..d {
            let col = train.x.column(j);
            let mean = col.sum() / n;
            means[j] = mean;
            let var = if n > 1.0 {
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            sds[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        // Group indicator columns by their source column, preserving order.
        let mut blocks: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (j, meta) in train.columns.iter().enumerate() {
            if let Some((src, _)) = &meta.indicator {
                blocks.entry(src.clone()).or_default().push(j);
            }
        }
        let cat_blocks = blocks
            .into_values()
            .map(|cols| {
                let freqs: Vec<f64> = cols
                    .iter()
                    .map(|&j| train.x.column(j).sum() / n)
                    .collect();
                (cols, freqs)
            })
            .collect();
        let numeric_cols = (0..d).filter(|&j| train.columns[j].indicator.is_none()).collect();
        TrainSummary { means, sds, cat_blocks, numeric_cols }
    }
}
