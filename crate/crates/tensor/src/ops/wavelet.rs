//! One-level orthonormal 2-D Haar transform and its exact inverse.
//!
//! For each 2x2 block [a b; c d]:
//!   LL = (a+b+c+d)/2, LH = (a-b+c-d)/2, HL = (a+b-c-d)/2, HH = (a-b-c+d)/2.
//! The transform matrix is symmetric orthogonal, so the inverse applies the
//! same coefficients and the backward passes are the opposite transforms.

use crate::error::{shape_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

/// The four subbands of a one-level decomposition, each [C, H/2, W/2].
pub struct HaarBands {
    pub ll: Tensor,
    pub lh: Tensor,
    pub hl: Tensor,
    pub hh: Tensor,
}

impl Graph {
    pub fn haar_dwt2(&self, x: &Tensor) -> Result<HaarBands> {
        if x.ndim() != 3 {
            return shape_err("haar_dwt2", format!("expected [C,H,W], got {:?}", x.shape()));
        }
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if h % 2 != 0 || w % 2 != 0 {
            return shape_err("haar_dwt2", format!("H,W must be even, got {h}x{w}"));
        }
        let (hh2, ww2) = (h / 2, w / 2);
        let n = c * hh2 * ww2;
        let xd = x.data();
        let (mut ll, mut lh, mut hl, mut hh) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for ch in 0..c {
            let base = ch * h * w;
            for by in 0..hh2 {
                for bx in 0..ww2 {
                    let a = xd[base + 2 * by * w + 2 * bx];
                    let b = xd[base + 2 * by * w + 2 * bx + 1];
                    let cc = xd[base + (2 * by + 1) * w + 2 * bx];
                    let d = xd[base + (2 * by + 1) * w + 2 * bx + 1];
                    let o = (ch * hh2 + by) * ww2 + bx;
                    ll[o] = (a + b + cc + d) / 2.0;
                    lh[o] = (a - b + cc - d) / 2.0;
                    hl[o] = (a + b - cc - d) / 2.0;
                    hh[o] = (a - b - cc + d) / 2.0;
                }
            }
        }
        drop(xd);

        let band_shape = vec![c, hh2, ww2];
        let bands = HaarBands {
            ll: Tensor::interior(band_shape.clone(), ll),
            lh: Tensor::interior(band_shape.clone(), lh),
            hl: Tensor::interior(band_shape.clone(), hl),
            hh: Tensor::interior(band_shape, hh),
        };
        if self.is_training() {
            let x = x.clone();
            let (ll, lh, hl, hh) = (
                bands.ll.clone(),
                bands.lh.clone(),
                bands.hl.clone(),
                bands.hh.clone(),
            );
            let outs = vec![ll.clone(), lh.clone(), hl.clone(), hh.clone()];
            self.record(outs, move || {
                let gll = ll.grad();
                let glh = lh.grad();
                let ghl = hl.grad();
                let ghh = hh.grad();
                if gll.is_none() && glh.is_none() && ghl.is_none() && ghh.is_none() {
                    return;
                }
                let zero = vec![0.0; c * hh2 * ww2];
                let gll = gll.as_deref().unwrap_or(&zero);
                let glh = glh.as_deref().unwrap_or(&zero);
                let ghl = ghl.as_deref().unwrap_or(&zero);
                let ghh = ghh.as_deref().unwrap_or(&zero);
                x.accumulate_grad_with(|gx| {
                    for ch in 0..c {
                        let base = ch * h * w;
                        for by in 0..hh2 {
                            for bx in 0..ww2 {
                                let o = (ch * hh2 + by) * ww2 + bx;
                                let (l, m, p, q) = (gll[o], glh[o], ghl[o], ghh[o]);
                                gx[base + 2 * by * w + 2 * bx] += (l + m + p + q) / 2.0;
                                gx[base + 2 * by * w + 2 * bx + 1] += (l - m + p - q) / 2.0;
                                gx[base + (2 * by + 1) * w + 2 * bx] += (l + m - p - q) / 2.0;
                                gx[base + (2 * by + 1) * w + 2 * bx + 1] +=
                                    (l - m - p + q) / 2.0;
                            }
                        }
                    }
                });
            });
        }
        Ok(bands)
    }

    pub fn haar_idwt2(&self, bands: &HaarBands) -> Result<Tensor> {
        let shape = bands.ll.shape().to_vec();
        for (name, t) in [("lh", &bands.lh), ("hl", &bands.hl), ("hh", &bands.hh)] {
            if t.shape() != shape.as_slice() {
                return shape_err(
                    "haar_idwt2",
                    format!("subband {name} {:?} vs ll {:?}", t.shape(), shape),
                );
            }
        }
        if shape.len() != 3 {
            return shape_err("haar_idwt2", format!("expected [C,H,W] subbands, got {shape:?}"));
        }
        let (c, hh2, ww2) = (shape[0], shape[1], shape[2]);
        let (h, w) = (hh2 * 2, ww2 * 2);
        let lld = bands.ll.data();
        let lhd = bands.lh.data();
        let hld = bands.hl.data();
        let hhd = bands.hh.data();
        let mut data = vec![0.0; c * h * w];
        for ch in 0..c {
            let base = ch * h * w;
            for by in 0..hh2 {
                for bx in 0..ww2 {
                    let o = (ch * hh2 + by) * ww2 + bx;
                    let (l, m, p, q) = (lld[o], lhd[o], hld[o], hhd[o]);
                    data[base + 2 * by * w + 2 * bx] = (l + m + p + q) / 2.0;
                    data[base + 2 * by * w + 2 * bx + 1] = (l - m + p - q) / 2.0;
                    data[base + (2 * by + 1) * w + 2 * bx] = (l + m - p - q) / 2.0;
                    data[base + (2 * by + 1) * w + 2 * bx + 1] = (l - m - p + q) / 2.0;
                }
            }
        }
        drop(lld);
        drop(lhd);
        drop(hld);
        drop(hhd);

        let out = Tensor::interior(vec![c, h, w], data);
        if self.is_training() {
            let (ll, lh, hl, hh) = (
                bands.ll.clone(),
                bands.lh.clone(),
                bands.hl.clone(),
                bands.hh.clone(),
            );
            let out = out.clone();
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let mut gll = vec![0.0; c * hh2 * ww2];
                let mut glh = vec![0.0; c * hh2 * ww2];
                let mut ghl = vec![0.0; c * hh2 * ww2];
                let mut ghh = vec![0.0; c * hh2 * ww2];
                for ch in 0..c {
                    let base = ch * h * w;
                    for by in 0..hh2 {
                        for bx in 0..ww2 {
                            let o = (ch * hh2 + by) * ww2 + bx;
                            let a = g[base + 2 * by * w + 2 * bx];
                            let b = g[base + 2 * by * w + 2 * bx + 1];
                            let cc = g[base + (2 * by + 1) * w + 2 * bx];
                            let d = g[base + (2 * by + 1) * w + 2 * bx + 1];
                            gll[o] += (a + b + cc + d) / 2.0;
                            glh[o] += (a - b + cc - d) / 2.0;
                            ghl[o] += (a + b - cc - d) / 2.0;
                            ghh[o] += (a - b - cc + d) / 2.0;
                        }
                    }
                }
                ll.accumulate_grad(&gll);
                lh.accumulate_grad(&glh);
                hl.accumulate_grad(&ghl);
                hh.accumulate_grad(&ghh);
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
    fn constant_concentrates_in_ll() {
        let g = Graph::inference();
        let x = Tensor::full(vec![1, 4, 4], 3.0);
        let b = g.haar_dwt2(&x).unwrap();
        assert!(b.ll.to_vec().iter().all(|&v| v == 6.0)); // 2c
        for band in [&b.lh, &b.hl, &b.hh] {
            assert!(band.to_vec().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_corner_block_spreads_evenly() {
        // block [1,0;0,0] -> all four coefficients 0.5
        let g = Graph::inference();
        let mut xd = vec![0.0; 4];
        xd[0] = 1.0;
        let x = Tensor::constant(vec![1, 2, 2], xd).unwrap();
        let b = g.haar_dwt2(&x).unwrap();
        assert_eq!(b.ll.to_vec(), vec![0.5]);
        assert_eq!(b.lh.to_vec(), vec![0.5]);
        assert_eq!(b.hl.to_vec(), vec![0.5]);
        assert_eq!(b.hh.to_vec(), vec![0.5]);
    }

    #[test]
    fn odd_extent_is_dimension_error() {
        let g = Graph::inference();
        assert!(g.haar_dwt2(&Tensor::zeros(vec![1, 3, 4])).is_err());
        assert!(g.haar_dwt2(&Tensor::zeros(vec![1, 4, 5])).is_err());
    }

    #[test]
    fn round_trip_and_parseval() {
        let g = Graph::inference();
        let mut rng = Rng::seed(33);
        let xd: Vec<f64> = (0..2 * 8 * 8).map(|_| rng.range(-1.0, 1.0)).collect();
        let x = Tensor::constant(vec![2, 8, 8], xd.clone()).unwrap();
        let b = g.haar_dwt2(&x).unwrap();
        let back = g.haar_idwt2(&b).unwrap();
        for (a, v) in back.to_vec().iter().zip(&xd) {
            assert!((a - v).abs() < 1e-12);
        }
        let energy_in: f64 = xd.iter().map(|v| v * v).sum();
        let energy_out: f64 = [&b.ll, &b.lh, &b.hl, &b.hh]
            .iter()
            .map(|t| t.to_vec().iter().map(|v| v * v).sum::<f64>())
            .sum();
        assert!((energy_in - energy_out).abs() < 1e-9);
    }

    #[test]
    fn idwt_of_zero_bands_is_zero_and_ll_restores_constant() {
        let g = Graph::inference();
        let zero = || Tensor::zeros(vec![1, 2, 2]);
        let bands = HaarBands {
            ll: zero(),
            lh: zero(),
            hl: zero(),
            hh: zero(),
        };
        assert!(g
            .haar_idwt2(&bands)
            .unwrap()
            .to_vec()
            .iter()
            .all(|&v| v == 0.0));

        let bands = HaarBands {
            ll: Tensor::full(vec![1, 2, 2], 2.0 * 1.5),
            lh: zero(),
            hl: zero(),
            hh: zero(),
        };
        let y = g.haar_idwt2(&bands).unwrap();
        assert!(y.to_vec().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn subband_shape_mismatch_errors() {
        let g = Graph::inference();
        let bands = HaarBands {
            ll: Tensor::zeros(vec![1, 2, 2]),
            lh: Tensor::zeros(vec![1, 2, 3]),
            hl: Tensor::zeros(vec![1, 2, 2]),
            hh: Tensor::zeros(vec![1, 2, 2]),
        };
        assert!(g.haar_idwt2(&bands).is_err());
    }
}
