//! Small dense linear algebra: vector linear maps, outer products, and
//! channel-broadcast multiplies.

use crate::error::{shape_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

impl Graph {
    /// y = W x + b with x [N], W [M, N], b [M].
    pub fn linear(&self, x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
        if x.ndim() != 1 || weight.ndim() != 2 {
            return shape_err(
                "linear",
                format!("x {:?}, weight {:?}", x.shape(), weight.shape()),
            );
        }
        let n = x.shape()[0];
        let (m, wn) = (weight.shape()[0], weight.shape()[1]);
        if wn != n || bias.shape() != [m] {
            return shape_err(
                "linear",
                format!(
                    "x [{n}], weight [{m},{wn}], bias {:?}",
                    bias.shape()
                ),
            );
        }
        let xd = x.data();
        let wd = weight.data();
        let bd = bias.data();
        let mut data = vec![0.0; m];
        for r in 0..m {
            let mut acc = bd[r];
            for c in 0..n {
                acc += wd[r * n + c] * xd[c];
            }
            data[r] = acc;
        }
        drop(xd);
        drop(wd);
        drop(bd);

        let out = Tensor::interior(vec![m], data);
        if self.is_training() {
            let (x, weight, bias, out) = (x.clone(), weight.clone(), bias.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let xd = x.data();
                let wd = weight.data();
                let mut gx = vec![0.0; n];
                let mut gw = vec![0.0; m * n];
                for r in 0..m {
                    let go = g[r];
                    for c in 0..n {
                        gx[c] += go * wd[r * n + c];
                        gw[r * n + c] += go * xd[c];
                    }
                }
                drop(xd);
                drop(wd);
                x.accumulate_grad(&gx);
                weight.accumulate_grad(&gw);
                bias.accumulate_grad(&g);
            });
        }
        Ok(out)
    }

    /// Rank-one matrix u v^T from two vectors of equal length.
    pub fn outer(&self, u: &Tensor, v: &Tensor) -> Result<Tensor> {
        if u.ndim() != 1 || v.ndim() != 1 || u.len() != v.len() {
            return shape_err("outer", format!("{:?} vs {:?}", u.shape(), v.shape()));
        }
        let n = u.len();
        let ud = u.data();
        let vd = v.data();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = ud[i] * vd[j];
            }
        }
        drop(ud);
        drop(vd);

        let out = Tensor::interior(vec![n, n], data);
        if self.is_training() {
            let (u, v, out) = (u.clone(), v.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                {
                    let vd = v.data();
                    u.accumulate_grad_with(|gu| {
                        for i in 0..n {
                            for j in 0..n {
                                gu[i] += g[i * n + j] * vd[j];
                            }
                        }
                    });
                }
                let ud = u.data();
                v.accumulate_grad_with(|gv| {
                    for i in 0..n {
                        for j in 0..n {
                            gv[j] += g[i * n + j] * ud[i];
                        }
                    }
                });
            });
        }
        Ok(out)
    }

    /// Square matrix with `v` on the diagonal.
    pub fn diag_embed(&self, v: &Tensor) -> Result<Tensor> {
        if v.ndim() != 1 {
            return shape_err("diag_embed", format!("expected vector, got {:?}", v.shape()));
        }
        let n = v.len();
        let vd = v.data();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = vd[i];
        }
        drop(vd);

        let out = Tensor::interior(vec![n, n], data);
        if self.is_training() {
            let (v, out) = (v.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                v.accumulate_grad_with(|gv| {
                    for i in 0..n {
                        gv[i] += g[i * n + i];
                    }
                });
            });
        }
        Ok(out)
    }

    /// Gather columns of an [R, C] matrix in the given order.
    pub fn select_columns(&self, m: &Tensor, indices: &[usize]) -> Result<Tensor> {
        if m.ndim() != 2 {
            return shape_err(
                "select_columns",
                format!("expected matrix, got {:?}", m.shape()),
            );
        }
        let (rows, cols) = (m.shape()[0], m.shape()[1]);
        if let Some(&bad) = indices.iter().find(|&&i| i >= cols) {
            return crate::error::arg_err(
                "select_columns",
                format!("column {bad} out of range ({cols})"),
            );
        }
        let k = indices.len();
        let md = m.data();
        let mut data = vec![0.0; rows * k];
        for r in 0..rows {
            for (j, &src) in indices.iter().enumerate() {
                data[r * k + j] = md[r * cols + src];
            }
        }
        drop(md);

        let out = Tensor::interior(vec![rows, k], data);
        if self.is_training() {
            let (m, out) = (m.clone(), out.clone());
            let indices = indices.to_vec();
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                m.accumulate_grad_with(|gm| {
                    for r in 0..rows {
                        for (j, &src) in indices.iter().enumerate() {
                            gm[r * cols + src] += g[r * k + j];
                        }
                    }
                });
            });
        }
        Ok(out)
    }

    /// Broadcast-multiply a [C, H, W] map by a per-channel vector
    /// (accepts [C], [C,1], or [C,1,1]).
    pub fn mul_channels(&self, x: &Tensor, v: &Tensor) -> Result<Tensor> {
        if x.ndim() != 3 {
            return shape_err("mul_channels", format!("x must be [C,H,W], got {:?}", x.shape()));
        }
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if v.len() != c {
            return shape_err(
                "mul_channels",
                format!("x has {c} channels, vector {:?}", v.shape()),
            );
        }
        let hw = h * w;
        let xd = x.data();
        let vd = v.data();
        let mut data = vec![0.0; c * hw];
        for ch in 0..c {
            let s = vd[ch];
            for p in 0..hw {
                data[ch * hw + p] = xd[ch * hw + p] * s;
            }
        }
        drop(xd);
        drop(vd);

        let out = Tensor::interior(vec![c, h, w], data);
        if self.is_training() {
            let (x, v, out) = (x.clone(), v.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                {
                    let vd = v.data();
                    x.accumulate_grad_with(|gx| {
                        for ch in 0..c {
                            let s = vd[ch];
                            for p in 0..hw {
                                gx[ch * hw + p] += g[ch * hw + p] * s;
                            }
                        }
                    });
                }
                let xd = x.data();
                v.accumulate_grad_with(|gv| {
                    for ch in 0..c {
                        let mut acc = 0.0;
                        for p in 0..hw {
                            acc += g[ch * hw + p] * xd[ch * hw + p];
                        }
                        gv[ch] += acc;
                    }
                });
            });
        }
        Ok(out)
    }

    /// Multiply a tensor by a single-element tensor (a learned scalar).
    pub fn mul_scalar(&self, x: &Tensor, s: &Tensor) -> Result<Tensor> {
        if s.len() != 1 {
            return shape_err("mul_scalar", format!("scalar has shape {:?}", s.shape()));
        }
        let sv = s.item();
        let data = x.data().iter().map(|v| v * sv).collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        if self.is_training() {
            let (x, s, out) = (x.clone(), s.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                {
                    let sv = s.item();
                    x.accumulate_grad_with(|gx| {
                        for i in 0..gx.len() {
                            gx[i] += g[i] * sv;
                        }
                    });
                }
                let xd = x.data();
                let acc: f64 = g.iter().zip(xd.iter()).map(|(a, b)| a * b).sum();
                s.accumulate_grad(&[acc]);
            });
        }
        Ok(out)
    }
}
