//! Permutation SHAP: walk feature permutations in forward and reverse
//! order, toggling each feature between the instance's value and background
//! values and averaging the marginal score changes. With all permutations
//! enumerated this is the exact Shapley value of the background-expectation
//! game; sampling gives an unbiased estimate whose attributions still sum
//! to `f(x) - base` exactly (telescoping within each walk).

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Explanation, Method, Scorer};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapConfig {
    /// Training rows sampled as the background set.
    pub background_size: usize,
    /// Forward+reverse permutation pairs when not exhaustive.
    pub n_permutations: usize,
    /// Enumerate all permutations when the feature count is at most this.
    pub exact_threshold: usize,
    pub seed: u64,
}

impl Default for ShapConfig {
    fn default() -> Self {
        ShapConfig { background_size: 100, n_permutations: 10, exact_threshold: 6, seed: 0 }
    }
}

fn all_permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..d).collect();
    heap_permute(&mut current, d, &mut out);
    out
}

fn heap_permute(arr: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(arr.clone());
        return;
    }
    for i in 0..k {
        heap_permute(arr, k - 1, out);
        if k % 2 == 0 {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
}

pub fn shap_permutation(
    model: &dyn Scorer,
    background: ArrayView2<'_, f64>,
    x: ArrayView1<'_, f64>,
    instance: usize,
    cfg: &ShapConfig,
) -> Result<Explanation> {
    if background.nrows() == 0 {
        return Err(Error::Validation("SHAP background must be nonempty".into()));
    }
    let d = x.len();
    if background.ncols() != d {
        return Err(Error::Schema("background width does not match instance".into()));
    }

    let exact = d <= cfg.exact_threshold;
    let perms: Vec<Vec<usize>> = if exact {
        all_permutations(d)
    } else {
        let mut r = rng::rng(rng::derive(cfg.seed, &["shap"]));
        (0..cfg.n_permutations)
            .map(|_| {
                let mut p: Vec<usize> = (0..d).collect();
                p.shuffle(&mut r);
                p
            })
            .collect()
    };

    let mut phi = vec![0.0f64; d];
    let mut base = 0.0f64;
    let mut walks = 0usize;
    let mut z = Array1::<f64>::zeros(d);
    for b in background.outer_iter() {
        base += model.score_one(b);
        for perm in &perms {
            // forward then reverse direction over the same permutation
            for dir in 0..2 {
                z.assign(&b);
                let mut prev = model.score_one(z.view());
                let iter: Box<dyn Iterator<Item = &usize>> = if dir == 0 {
                    Box::new(perm.iter())
                } else {
                    Box::new(perm.iter().rev())
                };
                for &k in iter {
                    z[k] = x[k];
                    let cur = model.score_one(z.view());
                    phi[k] += cur - prev;
                    prev = cur;
                }
                walks += 1;
            }
        }
    }
    let base_value = base / background.nrows() as f64;
    for v in &mut phi {
        *v /= walks as f64;
    }
    Ok(Explanation {
        instance,
        method: Method::Shap,
        values: phi,
        base_value: Some(base_value),
        local_r2: None,
    })
}
