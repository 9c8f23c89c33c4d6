//! Max pooling. Gradient routes to the argmax element of each window,
//! first occurrence (row-major scan) on ties, so runs are bit-reproducible.

use crate::error::{shape_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

impl Graph {
    /// Windowed max over [C, H, W]. Padding (if any) behaves as -inf so it
    /// never wins a window.
    pub fn maxpool2d(
        &self,
        x: &Tensor,
        window: usize,
        stride: usize,
        pad: usize,
    ) -> Result<Tensor> {
        if x.ndim() != 3 {
            return shape_err("maxpool2d", format!("expected [C,H,W], got {:?}", x.shape()));
        }
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if window == 0 || stride == 0 {
            return crate::error::arg_err("maxpool2d", "window and stride must be >= 1");
        }
        if h + 2 * pad < window || w + 2 * pad < window {
            return shape_err(
                "maxpool2d",
                format!("window {window} larger than padded extent {h}x{w}+2*{pad}"),
            );
        }
        let oh = (h + 2 * pad - window) / stride + 1;
        let ow = (w + 2 * pad - window) / stride + 1;

        let xd = x.data();
        let mut data = vec![0.0; c * oh * ow];
        let mut argmax = vec![0usize; c * oh * ow];
        for ch in 0..c {
            let xbase = ch * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = usize::MAX;
                    for dy in 0..window {
                        let iy = (oy * stride + dy) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for dx in 0..window {
                            let ix = (ox * stride + dx) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let idx = xbase + iy as usize * w + ix as usize;
                            if xd[idx] > best {
                                best = xd[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    let o = (ch * oh + oy) * ow + ox;
                    data[o] = best;
                    argmax[o] = best_idx;
                }
            }
        }
        drop(xd);

        let out = Tensor::interior(vec![c, oh, ow], data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                x.accumulate_grad_with(|gx| {
                    for (o, &src) in argmax.iter().enumerate() {
                        gx[src] += g[o];
                    }
                });
            });
        }
        Ok(out)
    }

    /// Per-channel spatial maximum, [C, H, W] -> [C, 1, 1].
    pub fn global_maxpool(&self, x: &Tensor) -> Result<Tensor> {
        if x.ndim() != 3 {
            return shape_err(
                "global_maxpool",
                format!("expected [C,H,W], got {:?}", x.shape()),
            );
        }
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if h == 0 || w == 0 {
            return shape_err("global_maxpool", "empty spatial extent");
        }
        let xd = x.data();
        let mut data = vec![0.0; c];
        let mut argmax = vec![0usize; c];
        for ch in 0..c {
            let base = ch * h * w;
            let mut best = f64::NEG_INFINITY;
            let mut best_idx = base;
            for p in 0..h * w {
                if xd[base + p] > best {
                    best = xd[base + p];
                    best_idx = base + p;
                }
            }
            data[ch] = best;
            argmax[ch] = best_idx;
        }
        drop(xd);

        let out = Tensor::interior(vec![c, 1, 1], data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                x.accumulate_grad_with(|gx| {
                    for ch in 0..c {
                        gx[argmax[ch]] += g[ch];
                    }
                });
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn two_by_two_window() {
        let g = Graph::inference();
        let x = Tensor::constant(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = g.maxpool2d(&x, 2, 2, 0).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.to_vec(), vec![4.0]);
    }

    #[test]
    fn constant_image_stays_constant() {
        let g = Graph::inference();
        let x = Tensor::full(vec![2, 4, 4], 7.5);
        let y = g.maxpool2d(&x, 2, 2, 0).unwrap();
        assert_eq!(y.shape(), &[2, 2, 2]);
        assert!(y.to_vec().iter().all(|&v| v == 7.5));
    }

    #[test]
    fn matches_nested_loop_oracle() {
        let g = Graph::inference();
        let mut rng = Rng::seed(8);
        let xd: Vec<f64> = (0..36).map(|_| rng.range(-1.0, 1.0)).collect();
        let x = Tensor::constant(vec![1, 6, 6], xd.clone()).unwrap();
        let y = g.maxpool2d(&x, 2, 2, 0).unwrap();
        let mut want = Vec::new();
        for oy in 0..3 {
            for ox in 0..3 {
                let mut m = f64::NEG_INFINITY;
                for dy in 0..2 {
                    for dx in 0..2 {
                        m = m.max(xd[(2 * oy + dy) * 6 + 2 * ox + dx]);
                    }
                }
                want.push(m);
            }
        }
        assert_eq!(y.to_vec(), want);
    }

    #[test]
    fn window_larger_than_extent_errors() {
        let g = Graph::inference();
        let x = Tensor::zeros(vec![1, 2, 2]);
        assert!(g.maxpool2d(&x, 3, 1, 0).is_err());
    }

    #[test]
    fn padded_pool_preserves_shape() {
        let g = Graph::inference();
        let x = Tensor::full(vec![1, 5, 5], -2.0);
        let y = g.maxpool2d(&x, 3, 1, 1).unwrap();
        assert_eq!(y.shape(), &[1, 5, 5]);
        // padding is -inf, so the constant still wins everywhere
        assert!(y.to_vec().iter().all(|&v| v == -2.0));
    }

    #[test]
    fn gradient_mass_is_preserved_and_unique() {
        let g = Graph::training();
        let mut rng = Rng::seed(12);
        let xd: Vec<f64> = (0..16).map(|_| rng.uniform()).collect();
        let x = Tensor::param(vec![1, 4, 4], xd).unwrap();
        let y = g.maxpool2d(&x, 2, 2, 0).unwrap();
        let s = g.sum_all(&y).unwrap();
        g.backward(&s).unwrap();
        let gx = x.grad().unwrap();
        let nonzero = gx.iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 4); // one contributor per window
        assert_eq!(gx.iter().sum::<f64>(), 4.0); // total mass = number of windows
    }

    #[test]
    fn tie_breaks_to_first_in_scan_order() {
        let g = Graph::training();
        let x = Tensor::param(vec![1, 2, 2], vec![5.0, 5.0, 5.0, 5.0]).unwrap();
        let y = g.maxpool2d(&x, 2, 2, 0).unwrap();
        let s = g.sum_all(&y).unwrap();
        g.backward(&s).unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn global_maxpool_values() {
        let g = Graph::inference();
        let x = Tensor::constant(vec![1, 2, 2], vec![-1.0, -2.0, -3.0, -4.0]).unwrap();
        let y = g.global_maxpool(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1]);
        assert_eq!(y.to_vec(), vec![-1.0]);

        let single = Tensor::constant(vec![1, 1, 1], vec![0.25]).unwrap();
        assert_eq!(g.global_maxpool(&single).unwrap().to_vec(), vec![0.25]);
    }

    #[test]
    fn global_maxpool_matches_per_channel_oracle() {
        let g = Graph::inference();
        let mut rng = Rng::seed(30);
        let xd: Vec<f64> = (0..3 * 25).map(|_| rng.range(-2.0, 2.0)).collect();
        let x = Tensor::constant(vec![3, 5, 5], xd.clone()).unwrap();
        let y = g.global_maxpool(&x).unwrap();
        for ch in 0..3 {
            let want = xd[ch * 25..(ch + 1) * 25]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(y.to_vec()[ch], want);
        }
    }
}
