//! Elementwise arithmetic and full reductions.

use crate::error::{shape_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

fn check_same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return shape_err(op, format!("{:?} vs {:?}", a.shape(), b.shape()));
    }
    Ok(())
}

impl Graph {
    pub fn add(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        check_same_shape("add", a, b)?;
        let data = a
            .data()
            .iter()
            .zip(b.data().iter())
            .map(|(x, y)| x + y)
            .collect();
        let out = Tensor::interior(a.shape().to_vec(), data);
        if self.is_training() {
            let (a, b, out) = (a.clone(), b.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                a.accumulate_grad(&g);
                b.accumulate_grad(&g);
            });
        }
        Ok(out)
    }

    pub fn sub(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        check_same_shape("sub", a, b)?;
        let data = a
            .data()
            .iter()
            .zip(b.data().iter())
            .map(|(x, y)| x - y)
            .collect();
        let out = Tensor::interior(a.shape().to_vec(), data);
        if self.is_training() {
            let (a, b, out) = (a.clone(), b.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                a.accumulate_grad(&g);
                b.accumulate_grad_with(|gb| {
                    for (gi, gv) in gb.iter_mut().zip(g.iter()) {
                        *gi -= gv;
                    }
                });
            });
        }
        Ok(out)
    }

    pub fn mul(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        check_same_shape("mul", a, b)?;
        let data = a
            .data()
            .iter()
            .zip(b.data().iter())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::interior(a.shape().to_vec(), data);
        if self.is_training() {
            let (a, b, out) = (a.clone(), b.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                {
                    let bd = b.data();
                    a.accumulate_grad_with(|ga| {
                        for i in 0..ga.len() {
                            ga[i] += g[i] * bd[i];
                        }
                    });
                }
                let ad = a.data();
                b.accumulate_grad_with(|gb| {
                    for i in 0..gb.len() {
                        gb[i] += g[i] * ad[i];
                    }
                });
            });
        }
        Ok(out)
    }

    pub fn div(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        check_same_shape("div", a, b)?;
        let data = a
            .data()
            .iter()
            .zip(b.data().iter())
            .map(|(x, y)| x / y)
            .collect();
        let out = Tensor::interior(a.shape().to_vec(), data);
        if self.is_training() {
            let (a, b, out) = (a.clone(), b.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                {
                    let bd = b.data();
                    a.accumulate_grad_with(|ga| {
                        for i in 0..ga.len() {
                            ga[i] += g[i] / bd[i];
                        }
                    });
                }
                let ad = a.data();
                let bd = b.data();
                b.accumulate_grad_with(|gb| {
                    for i in 0..gb.len() {
                        gb[i] -= g[i] * ad[i] / (bd[i] * bd[i]);
                    }
                });
            });
        }
        Ok(out)
    }

    /// Multiply by a plain constant.
    pub fn scale(&self, x: &Tensor, c: f64) -> Result<Tensor> {
        let data = x.data().iter().map(|v| v * c).collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                x.accumulate_grad_with(|gx| {
                    for i in 0..gx.len() {
                        gx[i] += c * g[i];
                    }
                });
            });
        }
        Ok(out)
    }

    pub fn add_scalar(&self, x: &Tensor, c: f64) -> Result<Tensor> {
        let data = x.data().iter().map(|v| v + c).collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                x.accumulate_grad(&g);
            });
        }
        Ok(out)
    }

    /// |x| with subgradient 0 at the origin.
    pub fn abs(&self, x: &Tensor) -> Result<Tensor> {
        let data = x.data().iter().map(|v| v.abs()).collect();
        let out = Tensor::interior(x.shape().to_vec(), data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let xd = x.data();
                x.accumulate_grad_with(|gx| {
                    for i in 0..gx.len() {
                        gx[i] += g[i] * sign(xd[i]);
                    }
                });
            });
        }
        Ok(out)
    }

    pub fn sum_all(&self, x: &Tensor) -> Result<Tensor> {
        let s: f64 = x.data().iter().sum();
        let out = Tensor::interior(vec![1], vec![s]);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let g0 = g[0];
                x.accumulate_grad_with(|gx| {
                    for gi in gx.iter_mut() {
                        *gi += g0;
                    }
                });
            });
        }
        Ok(out)
    }

    pub fn mean_all(&self, x: &Tensor) -> Result<Tensor> {
        let n = x.len() as f64;
        let s: f64 = x.data().iter().sum();
        let out = Tensor::interior(vec![1], vec![s / n]);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let g0 = g[0] / n;
                x.accumulate_grad_with(|gx| {
                    for gi in gx.iter_mut() {
                        *gi += g0;
                    }
                });
            });
        }
        Ok(out)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
