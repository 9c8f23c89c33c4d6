//! Discrete selection ops: top-k, hard zero-thresholding, dropout masking.

use crate::error::{arg_err, shape_err, Result};
use crate::graph::{Graph, Mode};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Values and source indices returned by [`Graph::topk`].
pub struct TopK {
    pub values: Tensor,
    pub indices: Vec<usize>,
}

/// Rank positions of a slice: descending by value, ties broken by the
/// lower index first. Shared by `topk` and the column-ranking step of the
/// spectral coordinate matrix.
pub fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

impl Graph {
    /// k largest entries of a vector in descending order. Gradient flows
    /// to the selected positions; indices are reported in selection order.
    pub fn topk(&self, v: &Tensor, k: usize) -> Result<TopK> {
        if v.ndim() != 1 {
            return shape_err("topk", format!("expected vector, got {:?}", v.shape()));
        }
        let n = v.len();
        if k == 0 || k > n {
            return arg_err("topk", format!("k={k} out of range 1..={n}"));
        }
        let vd = v.data();
        let indices: Vec<usize> = rank_descending(&vd).into_iter().take(k).collect();
        let values: Vec<f64> = indices.iter().map(|&i| vd[i]).collect();
        drop(vd);

        let out = Tensor::interior(vec![k], values);
        if self.is_training() {
            let (v, out) = (v.clone(), out.clone());
            let idx = indices.clone();
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                v.accumulate_grad_with(|gv| {
                    for (j, &src) in idx.iter().enumerate() {
                        gv[src] += g[j];
                    }
                });
            });
        }
        Ok(TopK {
            values: out,
            indices,
        })
    }

    /// Clamp entries with |value| < tau to exactly zero. Piecewise-constant
    /// mask: kept entries pass gradient through, clamped entries block it.
    pub fn zero_small(&self, x: &Tensor, tau: f64) -> Result<Tensor> {
        if tau < 0.0 {
            return arg_err("zero_small", "tau must be >= 0");
        }
        let keep: Vec<bool> = x.data().iter().map(|&v| v.abs() >= tau).collect();
        let data = x
            .data()
            .iter()
            .zip(&keep)
            .map(|(&v, &k)| if k { v } else { 0.0 })
            .collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                x.accumulate_grad_with(|gx| {
                    for i in 0..gx.len() {
                        if keep[i] {
                            gx[i] += g[i];
                        }
                    }
                });
            });
        }
        Ok(out)
    }

    /// Inverted dropout driven by a seeded generator. Identity in inference
    /// mode (bit-exact passthrough); in training each element is kept with
    /// probability 1-rate and scaled by 1/(1-rate).
    pub fn dropout_mask(&self, x: &Tensor, rate: f64, seed: u64) -> Result<Tensor> {
        if !(0.0..1.0).contains(&rate) {
            return arg_err("dropout_mask", format!("rate {rate} not in [0,1)"));
        }
        if self.mode() == Mode::Inference || rate == 0.0 {
            // Passthrough. Returning the same tensor keeps inference
            // bit-identical to its input; in training with rate 0 the
            // gradient path is unchanged too.
            return Ok(x.clone());
        }
        let mut rng = Rng::seed(seed);
        let scale = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.uniform() >= rate { scale } else { 0.0 })
            .collect();
        let data = x
            .data()
            .iter()
            .zip(&mask)
            .map(|(&v, &m)| v * m)
            .collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        let (x, out_c) = (x.clone(), out.clone());
        self.record(vec![out.clone()], move || {
            let Some(g) = out_c.grad_ref() else { return };
            x.accumulate_grad_with(|gx| {
                for i in 0..gx.len() {
                    gx[i] += g[i] * mask[i];
                }
            });
        });
        Ok(out)
    }
}
