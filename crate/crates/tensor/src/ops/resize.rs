//! Bilinear resizing with half-pixel centers (align-corners disabled).

use crate::error::{shape_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

/// Source coordinate and lerp weight for one output index.
fn src_coord(o: usize, scale: f64, in_len: usize) -> (usize, usize, f64) {
    let s = (o as f64 + 0.5) * scale - 0.5;
    let s = s.max(0.0);
    let i0 = (s.floor() as usize).min(in_len - 1);
    let i1 = (i0 + 1).min(in_len - 1);
    let frac = s - i0 as f64;
    (i0, i1, frac)
}

impl Graph {
    /// Resize [C, H, W] to [C, out_h, out_w]. Constants map to the same
    /// constant exactly because interpolation is done in lerp form.
    pub fn bilinear_resize(&self, x: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
        if x.ndim() != 3 {
            return shape_err(
                "bilinear_resize",
                format!("expected [C,H,W], got {:?}", x.shape()),
            );
        }
        if out_h == 0 || out_w == 0 {
            return crate::error::arg_err("bilinear_resize", "target size must be >= 1");
        }
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let sy = h as f64 / out_h as f64;
        let sx = w as f64 / out_w as f64;

        let xd = x.data();
        let mut data = vec![0.0; c * out_h * out_w];
        for ch in 0..c {
            let base = ch * h * w;
            for oy in 0..out_h {
                let (y0, y1, fy) = src_coord(oy, sy, h);
                for ox in 0..out_w {
                    let (x0, x1, fx) = src_coord(ox, sx, w);
                    let p00 = xd[base + y0 * w + x0];
                    let p01 = xd[base + y0 * w + x1];
                    let p10 = xd[base + y1 * w + x0];
                    let p11 = xd[base + y1 * w + x1];
                    let top = p00 + fx * (p01 - p00);
                    let bot = p10 + fx * (p11 - p10);
                    data[(ch * out_h + oy) * out_w + ox] = top + fy * (bot - top);
                }
            }
        }
        drop(xd);

        let out = Tensor::interior(vec![c, out_h, out_w], data);
        if self.is_training() {
            let (x, out) = (x.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                x.accumulate_grad_with(|gx| {
                    for ch in 0..c {
                        let base = ch * h * w;
                        for oy in 0..out_h {
                            let (y0, y1, fy) = src_coord(oy, sy, h);
                            for ox in 0..out_w {
                                let (x0, x1, fx) = src_coord(ox, sx, w);
                                let go = g[(ch * out_h + oy) * out_w + ox];
                                gx[base + y0 * w + x0] += go * (1.0 - fy) * (1.0 - fx);
                                gx[base + y0 * w + x1] += go * (1.0 - fy) * fx;
                                gx[base + y1 * w + x0] += go * fy * (1.0 - fx);
                                gx[base + y1 * w + x1] += go * fy * fx;
                            }
                        }
                    }
                });
            });
        }
        Ok(out)
    }

    /// Halve the spatial extent (the pyramid's downsampling step).
    pub fn down2(&self, x: &Tensor) -> Result<Tensor> {
        let (h, w) = (x.shape()[1], x.shape()[2]);
        self.bilinear_resize(x, (h / 2).max(1), (w / 2).max(1))
    }

    /// Double the spatial extent (the pyramid's upsampling step).
    pub fn up2(&self, x: &Tensor) -> Result<Tensor> {
        let (h, w) = (x.shape()[1], x.shape()[2]);
        self.bilinear_resize(x, h * 2, w * 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    /// Independent half-pixel bilinear oracle over plain slices.
    fn bilinear_oracle(
        x: &[f64],
        c: usize,
        h: usize,
        w: usize,
        oh: usize,
        ow: usize,
    ) -> Vec<f64> {
        let mut out = vec![0.0; c * oh * ow];
        for ch in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let fy = ((oy as f64 + 0.5) * h as f64 / oh as f64 - 0.5).max(0.0);
                    let fx = ((ox as f64 + 0.5) * w as f64 / ow as f64 - 0.5).max(0.0);
                    let y0 = (fy.floor() as usize).min(h - 1);
                    let x0 = (fx.floor() as usize).min(w - 1);
                    let y1 = (y0 + 1).min(h - 1);
                    let x1 = (x0 + 1).min(w - 1);
                    let (ty, tx) = (fy - y0 as f64, fx - x0 as f64);
                    let v = (1.0 - ty) * (1.0 - tx) * x[(ch * h + y0) * w + x0]
                        + (1.0 - ty) * tx * x[(ch * h + y0) * w + x1]
                        + ty * (1.0 - tx) * x[(ch * h + y1) * w + x0]
                        + ty * tx * x[(ch * h + y1) * w + x1];
                    out[(ch * oh + oy) * ow + ox] = v;
                }
            }
        }
        out
    }

    #[test]
    fn constants_map_to_the_same_constant_exactly() {
        let g = Graph::inference();
        let x = Tensor::full(vec![2, 5, 7], 5.0);
        for (oh, ow) in [(10, 14), (2, 3), (5, 7), (13, 4)] {
            let y = g.bilinear_resize(&x, oh, ow).unwrap();
            assert!(y.to_vec().iter().all(|&v| v == 5.0), "{oh}x{ow}");
        }
    }

    #[test]
    fn ramp_upsamples_monotonically() {
        let g = Graph::inference();
        let x = Tensor::constant(vec![1, 2, 2], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let y = g.bilinear_resize(&x, 4, 4).unwrap();
        let yd = y.to_vec();
        for r in 0..4 {
            let row = &yd[r * 4..(r + 1) * 4];
            for i in 1..4 {
                assert!(row[i] >= row[i - 1]);
            }
            // rows are identical (columns interpolate, rows constant)
            assert_eq!(row, &yd[0..4]);
        }
        assert_eq!(yd[0], 0.0);
        assert_eq!(yd[3], 1.0);
    }

    #[test]
    fn downsample_matches_oracle() {
        let g = Graph::inference();
        let mut rng = Rng::seed(19);
        let xd: Vec<f64> = (0..64).map(|_| rng.uniform()).collect();
        let x = Tensor::constant(vec![1, 8, 8], xd.clone()).unwrap();
        let y = g.bilinear_resize(&x, 4, 4).unwrap();
        let want = bilinear_oracle(&xd, 1, 8, 8, 4, 4);
        for (a, b) in y.to_vec().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn upsample_matches_oracle() {
        let g = Graph::inference();
        let mut rng = Rng::seed(20);
        let xd: Vec<f64> = (0..2 * 16).map(|_| rng.range(-1.0, 1.0)).collect();
        let x = Tensor::constant(vec![2, 4, 4], xd.clone()).unwrap();
        let y = g.bilinear_resize(&x, 8, 8).unwrap();
        let want = bilinear_oracle(&xd, 2, 4, 4, 8, 8);
        for (a, b) in y.to_vec().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
