//! Layer normalization over the channel axis, applied per pixel.

use crate::error::{arg_err, shape_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

impl Graph {
    /// Normalize each pixel's channel vector to zero mean / unit variance
    /// (biased variance, stabilized by eps), then apply the per-channel
    /// affine pair (gamma, beta).
    pub fn layernorm(
        &self,
        x: &Tensor,
        gamma: &Tensor,
        beta: &Tensor,
        eps: f64,
    ) -> Result<Tensor> {
        if x.ndim() != 3 {
            return shape_err("layernorm", format!("expected [C,H,W], got {:?}", x.shape()));
        }
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        if gamma.shape() != [c] || beta.shape() != [c] {
            return shape_err(
                "layernorm",
                format!(
                    "gamma {:?} / beta {:?}, want [{c}]",
                    gamma.shape(),
                    beta.shape()
                ),
            );
        }
        if eps <= 0.0 {
            return arg_err("layernorm", "eps must be > 0");
        }
        let hw = h * w;
        let xd = x.data();
        let gd = gamma.data();
        let bd = beta.data();
        let mut data = vec![0.0; c * hw];
        // per-pixel inverse stddev and mean, reused by the backward pass
        let mut istds = vec![0.0; hw];
        let mut means = vec![0.0; hw];
        for p in 0..hw {
            let mut mean = 0.0;
            for ch in 0..c {
                mean += xd[ch * hw + p];
            }
            mean /= c as f64;
            let mut var = 0.0;
            for ch in 0..c {
                let d = xd[ch * hw + p] - mean;
                var += d * d;
            }
            var /= c as f64;
            let istd = 1.0 / (var + eps).sqrt();
            means[p] = mean;
            istds[p] = istd;
            for ch in 0..c {
                let xhat = (xd[ch * hw + p] - mean) * istd;
                data[ch * hw + p] = gd[ch] * xhat + bd[ch];
            }
        }
        drop(xd);
        drop(gd);
        drop(bd);

        let out = Tensor::interior(vec![c, h, w], data);
        if self.is_training() {
            let (x, gamma, beta, out) = (x.clone(), gamma.clone(), beta.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let xd = x.data();
                let gd = gamma.data();
                let mut gx = vec![0.0; c * hw];
                let mut ggamma = vec![0.0; c];
                let mut gbeta = vec![0.0; c];
                for p in 0..hw {
                    let (mean, istd) = (means[p], istds[p]);
                    let mut sum_dxhat = 0.0;
                    let mut sum_dxhat_xhat = 0.0;
                    for ch in 0..c {
                        let xhat = (xd[ch * hw + p] - mean) * istd;
                        let go = g[ch * hw + p];
                        ggamma[ch] += go * xhat;
                        gbeta[ch] += go;
                        let dxhat = go * gd[ch];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                    }
                    let inv_c = 1.0 / c as f64;
                    for ch in 0..c {
                        let xhat = (xd[ch * hw + p] - mean) * istd;
                        let dxhat = g[ch * hw + p] * gd[ch];
                        gx[ch * hw + p] += istd
                            * (dxhat - inv_c * sum_dxhat - xhat * inv_c * sum_dxhat_xhat);
                    }
                }
                drop(xd);
                drop(gd);
                x.accumulate_grad(&gx);
                gamma.accumulate_grad(&ggamma);
                beta.accumulate_grad(&gbeta);
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
    fn already_normalized_pixel_is_nearly_fixed() {
        // gamma=1, beta=0, channels [1,-1]: zero mean, unit variance
        let g = Graph::inference();
        let x = Tensor::constant(vec![2, 1, 1], vec![1.0, -1.0]).unwrap();
        let gamma = Tensor::full(vec![2], 1.0);
        let beta = Tensor::zeros(vec![2]);
        let y = g.layernorm(&x, &gamma, &beta, 1e-5).unwrap();
        let yd = y.to_vec();
        assert!((yd[0] - 1.0).abs() < 1e-5);
        assert!((yd[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn constant_channels_collapse_to_beta() {
        let g = Graph::inference();
        let x = Tensor::full(vec![3, 2, 2], 4.2);
        let gamma = Tensor::full(vec![3], 1.0);
        let beta = Tensor::constant(vec![3], vec![0.5, -0.5, 0.0]).unwrap();
        let y = g.layernorm(&x, &gamma, &beta, 1e-5).unwrap();
        let yd = y.to_vec();
        for p in 0..4 {
            assert_eq!(yd[p], 0.5);
            assert_eq!(yd[4 + p], -0.5);
            assert_eq!(yd[8 + p], 0.0);
        }
    }

    #[test]
    fn output_moments_are_standardized() {
        let g = Graph::inference();
        let mut rng = Rng::seed(14);
        let c = 16;
        let xd: Vec<f64> = (0..c).map(|_| rng.range(-3.0, 3.0)).collect();
        let x = Tensor::constant(vec![c, 1, 1], xd).unwrap();
        let gamma = Tensor::full(vec![c], 1.0);
        let beta = Tensor::zeros(vec![c]);
        let y = g.layernorm(&x, &gamma, &beta, 1e-9).unwrap();
        let yd = y.to_vec();
        let mean: f64 = yd.iter().sum::<f64>() / c as f64;
        let var: f64 = yd.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
        assert!(mean.abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-6);
    }
}
