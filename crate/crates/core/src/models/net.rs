//! Single-hidden-layer neural network (rectified hidden units, sigmoid
//! output) trained with mini-batch momentum SGD and early stopping on a
//! validation slice of the training data.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CostBinding, TrainedModel};
use crate::losses::{self, LossKind};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub hidden: usize,
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
}

fn default_batch() -> usize {
    128
}
fn default_epochs() -> usize {
    200
}
fn default_patience() -> usize {
    10
}
fn default_momentum() -> f64 {
    0.9
}
fn default_val_fraction() -> f64 {
    0.1
}

impl Default for NetParams {
    fn default() -> Self {
        NetParams {
            hidden: 32,
            learning_rate: 0.005,
            batch_size: 128,
            max_epochs: 200,
            patience: 10,
            momentum: 0.9,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
    pub loss: LossKind,
    pub params: NetParams,
    pub seed: u64,
    pub loss_curve: Vec<f64>,
}

impl NetModel {
    pub fn n_features(&self) -> usize {
        self.w1.nrows()
    }

    pub fn n_parameters(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        let mut h = x.dot(&self.w1) + &self.b1;
        h.mapv_inplace(|v| v.max(0.0));
        losses::logistic(h.dot(&self.w2) + self.b2)
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, Array1<f64>) {
        let mut h = x.dot(&self.w1) + &self.b1;
        h.mapv_inplace(|v| v.max(0.0));
        let z = h.dot(&self.w2) + self.b2;
        (h, z)
    }
}

fn batch_loss(
    y: &[u8],
    scores: &[f64],
    loss: LossKind,
    cost: Option<(&[f64], &[f64])>,
) -> f64 {
    let n = y.len() as f64;
    match loss {
        LossKind::CrossEntropy => {
            y.iter().zip(scores).map(|(&yi, &si)| losses::ce_instance(yi, si)).sum::<f64>() / n
        }
        LossKind::Aec => {
            let (c_fn, c_fp) = cost.expect("AEC requires costs");
            (0..y.len())
                .map(|i| losses::aec_instance(y[i], scores[i], c_fn[i], c_fp[i]))
                .sum::<f64>()
                / n
        }
    }
}

pub fn fit_net(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    cost: Option<CostBinding<'_>>,
    params: &NetParams,
    loss: LossKind,
    seed: u64,
) -> Result<TrainedModel> {
    let n = y.len();
    if x.nrows() != n || n == 0 {
        return Err(Error::Validation("net: bad training shapes".into()));
    }
    let d = x.ncols();
    let h = params.hidden;
    let mut r = rng::rng(rng::derive(seed, &["net"]));

    // He-style init for the rectified layer.
    let scale1 = (2.0 / d as f64).sqrt();
    let scale2 = (2.0 / h as f64).sqrt();
    let w1 = Array2::from_shape_fn((d, h), |_| (r.gen::<f64>() * 2.0 - 1.0) * scale1);
    let b1 = Array1::zeros(h);
    let w2 = Array1::from_shape_fn(h, |_| (r.gen::<f64>() * 2.0 - 1.0) * scale2);
    let mut model = NetModel {
        w1,
        b1,
        w2,
        b2: 0.0,
        loss,
        params: params.clone(),
        seed,
        loss_curve: Vec::new(),
    };

    // Validation slice for early stopping.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let n_val = ((params.val_fraction * n as f64).round() as usize).min(n.saturating_sub(1));
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_idx: Vec<usize> = train_idx.to_vec();

    let gather_x = |idx: &[usize]| x.select(Axis(0), idx);
    let gather_y = |idx: &[usize]| -> Vec<u8> { idx.iter().map(|&i| y[i]).collect() };
    let gather_c = |idx: &[usize]| -> Option<(Vec<f64>, Vec<f64>)> {
        cost.map(|c| {
            (
                idx.iter().map(|&i| c.set.c_fn[i]).collect(),
                idx.iter().map(|&i| c.set.c_fp[i]).collect(),
            )
        })
    };

    let x_val = gather_x(val_idx);
    let y_val = gather_y(val_idx);
    let c_val = gather_c(val_idx);

    let eval = |m: &NetModel, xs: &Array2<f64>, ys: &[u8], cs: &Option<(Vec<f64>, Vec<f64>)>| {
        let (_, z) = m.forward(xs.view());
        let scores: Vec<f64> = z.iter().map(|&zi| losses::logistic(zi)).collect();
        batch_loss(ys, &scores, loss, cs.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())))
    };

    let mut v_w1 = Array2::<f64>::zeros((d, h));
    let mut v_b1 = Array1::<f64>::zeros(h);
    let mut v_w2 = Array1::<f64>::zeros(h);
    let mut v_b2 = 0.0;

    let initial_loss = {
        let xs = gather_x(&train_idx);
        let ys = gather_y(&train_idx);
        let cs = gather_c(&train_idx);
        eval(&model, &xs, &ys, &cs)
    };

    let mut best = model.clone();
    let mut best_val = if n_val > 0 { eval(&model, &x_val, &y_val, &c_val) } else { f64::INFINITY };
    let mut epochs_since_best = 0usize;
    let mut batch_order = train_idx.clone();

    for _epoch in 0..params.max_epochs {
        batch_order.shuffle(&mut r);
        for chunk in batch_order.chunks(params.batch_size.max(1)) {
            let xb = gather_x(chunk);
            let yb = gather_y(chunk);
            let cb = gather_c(chunk);
            let bsz = chunk.len() as f64;

            let (hb, z) = model.forward(xb.view());
            let mut dz = Array1::<f64>::zeros(chunk.len());
            for (i, &zi) in z.iter().enumerate() {
                let s = losses::logistic(zi);
                dz[i] = match loss {
                    LossKind::CrossEntropy => (s - f64::from(yb[i])) / bsz,
                    LossKind::Aec => {
                        let (c_fn, c_fp) = cb.as_ref().expect("AEC requires costs");
                        let w = if yb[i] == 1 { -c_fn[i] } else { c_fp[i] };
                        w * s * (1.0 - s) / bsz
                    }
                };
            }

            let d_w2 = hb.t().dot(&dz);
            let d_b2 = dz.sum();
            // back through the rectifier
            let mut d_h = dz
                .insert_axis(Axis(1))
                .dot(&model.w2.view().insert_axis(Axis(0)));
            for (mut row, hrow) in d_h.outer_iter_mut().zip(hb.outer_iter()) {
                for (g, &hv) in row.iter_mut().zip(hrow.iter()) {
                    if hv <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            let d_w1 = xb.t().dot(&d_h);
            let d_b1 = d_h.sum_axis(Axis(0));

            let lr = params.learning_rate;
            let m = params.momentum;
            v_w1 = m * &v_w1 - lr * &d_w1;
            v_b1 = m * &v_b1 - lr * &d_b1;
            v_w2 = m * &v_w2 - lr * &d_w2;
            v_b2 = m * v_b2 - lr * d_b2;
            model.w1 += &v_w1;
            model.b1 += &v_b1;
            model.w2 += &v_w2;
            model.b2 += v_b2;
        }

        let train_loss = {
            let xs = gather_x(&train_idx);
            let ys = gather_y(&train_idx);
            let cs = gather_c(&train_idx);
            eval(&model, &xs, &ys, &cs)
        };
        model.loss_curve.push(train_loss);
        if !train_loss.is_finite() || train_loss > 1e3 * initial_loss.max(1e-12) {
            return Err(Error::Numeric(format!("net: training diverged (loss {train_loss})")));
        }

        if n_val > 0 {
            let val_loss = eval(&model, &x_val, &y_val, &c_val);
            if val_loss < best_val - 1e-9 {
                best_val = val_loss;
                best = model.clone();
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best >= params.patience {
                    break;
                }
            }
        }
    }

    let mut chosen = if n_val > 0 { best } else { model.clone() };
    chosen.loss_curve = model.loss_curve;
    Ok(TrainedModel::Net(chosen))
}
