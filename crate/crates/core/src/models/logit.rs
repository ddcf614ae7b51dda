//! (Cost-sensitive) logistic regression trained by full-batch gradient
//! descent with an adaptive step size. The AEC variant minimizes the mean
//! expected cost under the logistic link; the penalty term applies to the
//! weights only, never the intercept.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{CostBinding, TrainedModel};
use crate::losses::{self, LossKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitParams {
    pub penalty: Penalty,
    /// Penalty weight on the coefficients; 0 fits unpenalized.
    pub c: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_epochs() -> usize {
    1000
}

fn default_tol() -> f64 {
    1e-7
}

impl Default for LogitParams {
    fn default() -> Self {
        LogitParams { penalty: Penalty::L2, c: 1e-3, max_epochs: 1000, tol: 1e-7 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogitModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub loss: LossKind,
    pub params: LogitParams,
    pub seed: u64,
    /// Objective value at each accepted step.
    pub loss_curve: Vec<f64>,
}

impl LogitModel {
    pub fn predict_one(&self, x: ArrayView1<'_, f64>) -> f64 {
        let z = x
            .iter()
            .zip(&self.weights)
            .map(|(xi, wi)| xi * wi)
            .sum::<f64>()
            + self.intercept;
        losses::logistic(z)
    }
}

struct Objective<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    loss: LossKind,
    cost: Option<CostBinding<'a>>,
    penalty: Penalty,
    reg: f64, // penalty weight; 0 = unpenalized
}

impl Objective<'_> {
    fn margins(&self, w: &Array1<f64>, b: f64) -> Array1<f64> {
        self.x.dot(w) + b
    }

    fn data_loss(&self, z: &Array1<f64>) -> f64 {
        let n = self.y.len() as f64;
        match self.loss {
            LossKind::CrossEntropy => {
                z.iter()
                    .zip(self.y)
                    .map(|(&zi, &yi)| losses::ce_instance(yi, losses::logistic(zi)))
                    .sum::<f64>()
                    / n
            }
            LossKind::Aec => {
                let c = self.cost.expect("AEC requires costs");
                z.iter()
                    .enumerate()
                    .map(|(i, &zi)| {
                        losses::aec_instance(
                            self.y[i],
                            losses::logistic(zi),
                            c.set.c_fn[i],
                            c.set.c_fp[i],
                        )
                    })
                    .sum::<f64>()
                    / n
            }
        }
    }

    fn penalty_term(&self, w: &Array1<f64>) -> f64 {
        match self.penalty {
            Penalty::L1 => self.reg * w.iter().map(|v| v.abs()).sum::<f64>(),
            Penalty::L2 => 0.5 * self.reg * w.iter().map(|v| v * v).sum::<f64>(),
        }
    }

    fn value(&self, w: &Array1<f64>, b: f64) -> f64 {
        self.data_loss(&self.margins(w, b)) + self.penalty_term(w)
    }

    /// Gradient in (weights, intercept).
    fn gradient(&self, w: &Array1<f64>, b: f64) -> (Array1<f64>, f64) {
        let n = self.y.len() as f64;
        let z = self.margins(w, b);
        let mut dz = Array1::<f64>::zeros(self.y.len());
        for i in 0..self.y.len() {
            let g = match self.loss {
                LossKind::CrossEntropy => losses::ce_grad_hess(self.y[i], z[i]).0,
                LossKind::Aec => {
                    let c = self.cost.expect("AEC requires costs");
                    losses::aec_grad_hess(self.y[i], z[i], c.set.c_fn[i], c.set.c_fp[i]).0
                }
            };
            dz[i] = g / n;
        }
        let mut gw = self.x.t().dot(&dz);
        let gb = dz.sum();
        match self.penalty {
            Penalty::L1 => {
                for (gi, wi) in gw.iter_mut().zip(w.iter()) {
                    if *wi != 0.0 {
                        *gi += self.reg * wi.signum();
                    }
                }
            }
            Penalty::L2 => gw += &(self.reg * w),
        }
        (gw, gb)
    }
}

pub fn fit_logit(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    cost: Option<CostBinding<'_>>,
    params: &LogitParams,
    loss: LossKind,
    seed: u64,
) -> Result<TrainedModel> {
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::Validation("logit: bad training shapes".into()));
    }
    if params.c < 0.0 {
        return Err(Error::Validation("logit: penalty weight must be non-negative".into()));
    }
    let obj = Objective { x: x.view(), y, loss, cost, penalty: params.penalty, reg: params.c };

    let d = x.ncols();
    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut step = 0.1;
    let mut value = obj.value(&w, b);
    if !value.is_finite() {
        return Err(Error::Numeric("logit: non-finite initial loss".into()));
    }
    let mut curve = vec![value];

    for _ in 0..params.max_epochs {
        let (gw, gb) = obj.gradient(&w, b);
        let gnorm = (gw.iter().map(|v| v * v).sum::<f64>() + gb * gb).sqrt();
        if gnorm < params.tol {
            break;
        }
        // Backtracking: shrink the step until the objective decreases.
        let mut accepted = false;
        for _ in 0..60 {
            let (wn, bn) = (&w - &(step * &gw), b - step * gb);
            let vn = obj.value(&wn, bn);
            if !vn.is_finite() {
                return Err(Error::Numeric("logit: non-finite loss during training".into()));
            }
            if vn <= value {
                w = wn;
                b = bn;
                value = vn;
                curve.push(value);
                step *= 1.2;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break; // step underflow: converged as far as f64 allows
        }
    }

    Ok(TrainedModel::Logit(LogitModel {
        weights: w.to_vec(),
        intercept: b,
        loss,
        params: params.clone(),
        seed,
        loss_curve: curve,
    }))
}
