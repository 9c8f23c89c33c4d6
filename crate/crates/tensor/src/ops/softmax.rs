//! Softmax along one axis, stabilized by max subtraction.

use crate::error::{arg_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

impl Graph {
    /// exp-normalize along `axis`; each slice sums to 1 and is strictly
    /// positive. Gradient: dx = y * (g - sum(g * y)) per slice.
    pub fn softmax(&self, x: &Tensor, axis: usize) -> Result<Tensor> {
        let shape = x.shape().to_vec();
        if axis >= shape.len() {
            return arg_err(
                "softmax",
                format!("axis {axis} out of range for shape {shape:?}"),
            );
        }
        let axis_len = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();

        let xd = x.data();
        let mut data = vec![0.0; xd.len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * axis_len * inner + i;
                let mut max = f64::NEG_INFINITY;
                for k in 0..axis_len {
                    max = max.max(xd[base + k * inner]);
                }
                let mut sum = 0.0;
                for k in 0..axis_len {
                    let e = (xd[base + k * inner] - max).exp();
                    data[base + k * inner] = e;
                    sum += e;
                }
                for k in 0..axis_len {
                    data[base + k * inner] /= sum;
                }
            }
        }
        drop(xd);

        let out = Tensor::interior(shape, data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let yd = out.data();
                x.accumulate_grad_with(|gx| {
                    for o in 0..outer {
                        for i in 0..inner {
                            let base = o * axis_len * inner + i;
                            let mut dot = 0.0;
                            for k in 0..axis_len {
                                let idx = base + k * inner;
                                dot += g[idx] * yd[idx];
                            }
                            for k in 0..axis_len {
                                let idx = base + k * inner;
                                gx[idx] += yd[idx] * (g[idx] - dot);
                            }
                        }
                    }
                });
            });
        }
        Ok(out)
    }

    /// Softmax over the joint spatial positions of each channel of a
    /// [C, H, W] map, used by the spatial attention gates.
    pub fn softmax_spatial(&self, x: &Tensor) -> Result<Tensor> {
        let shape = x.shape().to_vec();
        if shape.len() != 3 {
            return arg_err(
                "softmax_spatial",
                format!("expected [C,H,W], got {shape:?}"),
            );
        }
        let (c, h, w) = (shape[0], shape[1], shape[2]);
        let flat = self.reshape(x, vec![c, h * w])?;
        let soft = self.softmax(&flat, 1)?;
        self.reshape(&soft, shape)
    }
}
