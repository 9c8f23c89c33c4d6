//! 2-D convolutions: standard, depthwise (dilated), and pointwise.
//!
//! All convolutions use zero padding and operate on [C, H, W] tensors.
//! Output extent follows floor((H + 2*pad - dilation*(k-1) - 1) / stride) + 1.

use crate::error::{shape_err, Result};
use crate::graph::Graph;
use crate::tensor::Tensor;

fn out_extent(input: usize, pad: usize, dilation: usize, k: usize, stride: usize) -> usize {
    (input + 2 * pad - dilation * (k - 1) - 1) / stride + 1
}

impl Graph {
    /// Standard convolution: kernel [Cout, Cin, kh, kw], bias [Cout].
    pub fn conv2d(
        &self,
        x: &Tensor,
        kernel: &Tensor,
        bias: &Tensor,
        stride: usize,
        dilation: usize,
        pad: usize,
    ) -> Result<Tensor> {
        if x.ndim() != 3 || kernel.ndim() != 4 {
            return shape_err(
                "conv2d",
                format!("x {:?}, kernel {:?}", x.shape(), kernel.shape()),
            );
        }
        let (cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (cout, kcin, kh, kw) = (
            kernel.shape()[0],
            kernel.shape()[1],
            kernel.shape()[2],
            kernel.shape()[3],
        );
        if kcin != cin {
            return shape_err("conv2d", format!("kernel expects {kcin} channels, x has {cin}"));
        }
        if bias.shape() != [cout] {
            return shape_err("conv2d", format!("bias {:?}, want [{cout}]", bias.shape()));
        }
        let oh = out_extent(h, pad, dilation, kh, stride);
        let ow = out_extent(w, pad, dilation, kw, stride);

        let xd = x.data();
        let kd = kernel.data();
        let bd = bias.data();
        let mut data = vec![0.0; cout * oh * ow];
        for co in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = bd[co];
                    for ci in 0..cin {
                        let kbase = ((co * cin + ci) * kh) * kw;
                        let xbase = ci * h * w;
                        for ky in 0..kh {
                            let iy = (oy * stride + ky * dilation) as isize - pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let row = xbase + iy as usize * w;
                            for kx in 0..kw {
                                let ix = (ox * stride + kx * dilation) as isize - pad as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                acc += kd[kbase + ky * kw + kx] * xd[row + ix as usize];
                            }
                        }
                    }
                    data[(co * oh + oy) * ow + ox] = acc;
                }
            }
        }
        drop(xd);
        drop(kd);
        drop(bd);

        let out = Tensor::interior(vec![cout, oh, ow], data);
        if self.is_training() {
            let (x, kernel, bias, out) = (x.clone(), kernel.clone(), bias.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let xd = x.data();
                let kd = kernel.data();
                let mut gx = vec![0.0; xd.len()];
                let mut gk = vec![0.0; kd.len()];
                let mut gb = vec![0.0; cout];
                for co in 0..cout {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let go = g[(co * oh + oy) * ow + ox];
                            if go == 0.0 {
                                continue;
                            }
                            gb[co] += go;
                            for ci in 0..cin {
                                let kbase = ((co * cin + ci) * kh) * kw;
                                let xbase = ci * h * w;
                                for ky in 0..kh {
                                    let iy =
                                        (oy * stride + ky * dilation) as isize - pad as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    let row = xbase + iy as usize * w;
                                    for kx in 0..kw {
                                        let ix =
                                            (ox * stride + kx * dilation) as isize - pad as isize;
                                        if ix < 0 || ix >= w as isize {
                                            continue;
                                        }
                                        let xi = row + ix as usize;
                                        gx[xi] += go * kd[kbase + ky * kw + kx];
                                        gk[kbase + ky * kw + kx] += go * xd[xi];
                                    }
                                }
                            }
                        }
                    }
                }
                drop(xd);
                drop(kd);
                x.accumulate_grad(&gx);
                kernel.accumulate_grad(&gk);
                bias.accumulate_grad(&gb);
            });
        }
        Ok(out)
    }

    /// Depthwise convolution with per-channel kernels [C, k, k] and the
    /// shape-preserving padding dilation*(k-1)/2 (k odd).
    pub fn conv2d_depthwise(
        &self,
        x: &Tensor,
        kernel: &Tensor,
        dilation: usize,
        stride: usize,
    ) -> Result<Tensor> {
        let k = if kernel.ndim() == 3 { kernel.shape()[1] } else { 0 };
        if k == 0 || k % 2 == 0 {
            return shape_err(
                "conv2d_depthwise",
                format!("kernel must be [C,k,k] with k odd, got {:?}", kernel.shape()),
            );
        }
        let pad = dilation * (k - 1) / 2;
        self.conv2d_depthwise_padded(x, kernel, dilation, stride, pad)
    }

    /// Depthwise convolution with explicit zero padding (pad=0 gives the
    /// "valid" windows the SSIM pipeline needs).
    pub fn conv2d_depthwise_padded(
        &self,
        x: &Tensor,
        kernel: &Tensor,
        dilation: usize,
        stride: usize,
        pad: usize,
    ) -> Result<Tensor> {
        if x.ndim() != 3 || kernel.ndim() != 3 {
            return shape_err(
                "conv2d_depthwise",
                format!("x {:?}, kernel {:?}", x.shape(), kernel.shape()),
            );
        }
        let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (kc, kh, kw) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
        if kc != c {
            return shape_err(
                "conv2d_depthwise",
                format!("x has {c} channels, kernel {kc}"),
            );
        }
        if dilation == 0 || stride == 0 {
            return crate::error::arg_err("conv2d_depthwise", "dilation and stride must be >= 1");
        }
        let oh = out_extent(h, pad, dilation, kh, stride);
        let ow = out_extent(w, pad, dilation, kw, stride);

        let xd = x.data();
        let kd = kernel.data();
        let mut data = vec![0.0; c * oh * ow];
        for ch in 0..c {
            let kbase = ch * kh * kw;
            let xbase = ch * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0;
                    for ky in 0..kh {
                        let iy = (oy * stride + ky * dilation) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = xbase + iy as usize * w;
                        for kx in 0..kw {
                            let ix = (ox * stride + kx * dilation) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += kd[kbase + ky * kw + kx] * xd[row + ix as usize];
                        }
                    }
                    data[(ch * oh + oy) * ow + ox] = acc;
                }
            }
        }
        drop(xd);
        drop(kd);

        let out = Tensor::interior(vec![c, oh, ow], data);
        if self.is_training() {
            let (x, kernel, out) = (x.clone(), kernel.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let xd = x.data();
                let kd = kernel.data();
                let mut gx = vec![0.0; xd.len()];
                let mut gk = vec![0.0; kd.len()];
                for ch in 0..c {
                    let kbase = ch * kh * kw;
                    let xbase = ch * h * w;
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let go = g[(ch * oh + oy) * ow + ox];
                            if go == 0.0 {
                                continue;
                            }
                            for ky in 0..kh {
                                let iy = (oy * stride + ky * dilation) as isize - pad as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let row = xbase + iy as usize * w;
                                for kx in 0..kw {
                                    let ix =
                                        (ox * stride + kx * dilation) as isize - pad as isize;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let xi = row + ix as usize;
                                    gx[xi] += go * kd[kbase + ky * kw + kx];
                                    gk[kbase + ky * kw + kx] += go * xd[xi];
                                }
                            }
                        }
                    }
                }
                drop(xd);
                drop(kd);
                x.accumulate_grad(&gx);
                kernel.accumulate_grad(&gk);
            });
        }
        Ok(out)
    }

    /// Pointwise (1x1) convolution: per-pixel linear map across channels.
    /// kernel [Cout, Cin], bias [Cout].
    pub fn conv2d_pointwise(&self, x: &Tensor, kernel: &Tensor, bias: &Tensor) -> Result<Tensor> {
        if x.ndim() != 3 || kernel.ndim() != 2 {
            return shape_err(
                "conv2d_pointwise",
                format!("x {:?}, kernel {:?}", x.shape(), kernel.shape()),
            );
        }
        let (cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (cout, kcin) = (kernel.shape()[0], kernel.shape()[1]);
        if kcin != cin {
            return shape_err(
                "conv2d_pointwise",
                format!("x has {cin} channels, kernel expects {kcin}"),
            );
        }
        if bias.shape() != [cout] {
            return shape_err(
                "conv2d_pointwise",
                format!("bias {:?}, want [{cout}]", bias.shape()),
            );
        }
        let hw = h * w;
        let xd = x.data();
        let kd = kernel.data();
        let bd = bias.data();
        let mut data = vec![0.0; cout * hw];
        for co in 0..cout {
            let obase = co * hw;
            data[obase..obase + hw].fill(bd[co]);
            for ci in 0..cin {
                let kv = kd[co * cin + ci];
                if kv == 0.0 {
                    continue;
                }
                let ibase = ci * hw;
                for p in 0..hw {
                    data[obase + p] += kv * xd[ibase + p];
                }
            }
        }
        drop(xd);
        drop(kd);
        drop(bd);

        let out = Tensor::interior(vec![cout, h, w], data);
        if self.is_training() {
            let (x, kernel, bias, out) = (x.clone(), kernel.clone(), bias.clone(), out.clone());
            self.record(vec![out.clone()], move || {
                let Some(g) = out.grad_ref() else { return };
                let xd = x.data();
                let kd = kernel.data();
                let mut gx = vec![0.0; xd.len()];
                let mut gk = vec![0.0; kd.len()];
                let mut gb = vec![0.0; cout];
                for co in 0..cout {
                    let obase = co * hw;
                    for p in 0..hw {
                        gb[co] += g[obase + p];
                    }
                    for ci in 0..cin {
                        let kv = kd[co * cin + ci];
                        let ibase = ci * hw;
                        let mut gkv = 0.0;
                        for p in 0..hw {
                            let go = g[obase + p];
                            gx[ibase + p] += go * kv;
                            gkv += go * xd[ibase + p];
                        }
                        gk[co * cin + ci] += gkv;
                    }
                }
                drop(xd);
                drop(kd);
                x.accumulate_grad(&gx);
                kernel.accumulate_grad(&gk);
                bias.accumulate_grad(&gb);
            });
        }
        Ok(out)
    }
}
