//! Plain-array oracle kernels for straight-line reference compositions.
//!
//! Everything here works on flat `Vec<f64>` buffers with explicit dims and
//! is written independently of the tensor crate's kernels (different loop
//! structure, no shared helpers), so agreement is meaningful. The GELU
//! oracle integrates the normal density numerically instead of calling the
//! library's error function.

#![allow(dead_code)]

pub struct Map {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Map {
    pub fn new(c: usize, h: usize, w: usize, data: Vec<f64>) -> Self {
        assert_eq!(c * h * w, data.len());
        Map { c, h, w, data }
    }

    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Map::new(c, h, w, vec![0.0; c * h * w])
    }

    pub fn at(&self, ch: usize, y: usize, x: usize) -> f64 {
        self.data[(ch * self.h + y) * self.w + x]
    }

    pub fn set(&mut self, ch: usize, y: usize, x: usize, v: f64) {
        self.data[(ch * self.h + y) * self.w + x] = v;
    }
}

/// Normal CDF via adaptive Simpson integration of the density from 0 to x.
fn phi(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - phi(-x);
    }
    if x > 10.0 {
        return 1.0;
    }
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let n = 4000; // Simpson on [0, x]
    let h = x / n as f64;
    let mut s = f(0.0) + f(x);
    for i in 1..n {
        let t = i as f64 * h;
        s += f(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    0.5 + s * h / 3.0
}

pub fn gelu(x: f64) -> f64 {
    x * phi(x)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Depthwise conv, zero padding, stride 1, square odd kernel per channel.
pub fn depthwise(x: &Map, kernel: &[f64], k: usize, dilation: usize) -> Map {
    let pad = dilation * (k - 1) / 2;
    let mut out = Map::zeros(x.c, x.h, x.w);
    for ch in 0..x.c {
        for oy in 0..x.h {
            for ox in 0..x.w {
                let mut acc = 0.0;
                for ky in 0..k {
                    for kx in 0..k {
                        let iy = oy as isize + (ky * dilation) as isize - pad as isize;
                        let ix = ox as isize + (kx * dilation) as isize - pad as isize;
                        if iy >= 0 && (iy as usize) < x.h && ix >= 0 && (ix as usize) < x.w {
                            acc += kernel[(ch * k + ky) * k + kx]
                                * x.at(ch, iy as usize, ix as usize);
                        }
                    }
                }
                out.set(ch, oy, ox, acc);
            }
        }
    }
    out
}

/// Pointwise projection with bias: kernel [cout, cin] row-major.
pub fn pointwise(x: &Map, kernel: &[f64], bias: &[f64], cout: usize) -> Map {
    let mut out = Map::zeros(cout, x.h, x.w);
    for co in 0..cout {
        for y in 0..x.h {
            for xx in 0..x.w {
                let mut acc = bias[co];
                for ci in 0..x.c {
                    acc += kernel[co * x.c + ci] * x.at(ci, y, xx);
                }
                out.set(co, y, xx, acc);
            }
        }
    }
    out
}

/// Standard 3x3 conv, zero padding 1, stride 1: kernel [cout, cin, 3, 3].
pub fn conv3x3(x: &Map, kernel: &[f64], bias: &[f64], cout: usize) -> Map {
    let mut out = Map::zeros(cout, x.h, x.w);
    for co in 0..cout {
        for oy in 0..x.h {
            for ox in 0..x.w {
                let mut acc = bias[co];
                for ci in 0..x.c {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let iy = oy as isize + ky as isize - 1;
                            let ix = ox as isize + kx as isize - 1;
                            if iy >= 0 && (iy as usize) < x.h && ix >= 0 && (ix as usize) < x.w
                            {
                                acc += kernel[((co * x.c + ci) * 3 + ky) * 3 + kx]
                                    * x.at(ci, iy as usize, ix as usize);
                            }
                        }
                    }
                }
                out.set(co, oy, ox, acc);
            }
        }
    }
    out
}

pub fn dw_separable(x: &Map, dw: &[f64], k: usize, dilation: usize, pw: &[f64], pb: &[f64]) -> Map {
    pointwise(&depthwise(x, dw, k, dilation), pw, pb, x.c)
}

pub fn map_gelu(x: &Map) -> Map {
    Map::new(x.c, x.h, x.w, x.data.iter().map(|&v| gelu(v)).collect())
}

/// 3x3 window, stride 1, padding 1 max pool (padding never wins).
pub fn maxpool3(x: &Map) -> Map {
    let mut out = Map::zeros(x.c, x.h, x.w);
    for ch in 0..x.c {
        for y in 0..x.h {
            for xx in 0..x.w {
                let mut m = f64::NEG_INFINITY;
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let iy = y as isize + dy;
                        let ix = xx as isize + dx;
                        if iy >= 0 && (iy as usize) < x.h && ix >= 0 && (ix as usize) < x.w {
                            m = m.max(x.at(ch, iy as usize, ix as usize));
                        }
                    }
                }
                out.set(ch, y, xx, m);
            }
        }
    }
    out
}

/// Softmax over all spatial positions of each channel.
pub fn softmax_spatial(x: &Map) -> Map {
    let mut out = Map::zeros(x.c, x.h, x.w);
    for ch in 0..x.c {
        let slice: Vec<f64> = (0..x.h * x.w)
            .map(|p| x.data[ch * x.h * x.w + p])
            .collect();
        let m = slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = slice.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = exps.iter().sum();
        for (p, e) in exps.iter().enumerate() {
            out.data[ch * x.h * x.w + p] = e / s;
        }
    }
    out
}

pub fn global_maxpool(x: &Map) -> Vec<f64> {
    (0..x.c)
        .map(|ch| {
            x.data[ch * x.h * x.w..(ch + 1) * x.h * x.w]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn matvec(w: &[f64], rows: usize, cols: usize, x: &[f64], b: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| b[r] + (0..cols).map(|c| w[r * cols + c] * x[c]).sum::<f64>())
        .collect()
}

/// Per-pixel channel layer norm with affine.
pub fn layernorm(x: &Map, gamma: &[f64], beta: &[f64], eps: f64) -> Map {
    let mut out = Map::zeros(x.c, x.h, x.w);
    for y in 0..x.h {
        for xx in 0..x.w {
            let vals: Vec<f64> = (0..x.c).map(|ch| x.at(ch, y, xx)).collect();
            let mean = vals.iter().sum::<f64>() / x.c as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.c as f64;
            let istd = 1.0 / (var + eps).sqrt();
            for ch in 0..x.c {
                out.set(ch, y, xx, gamma[ch] * (vals[ch] - mean) * istd + beta[ch]);
            }
        }
    }
    out
}

/// One-level Haar split; returns (ll, lh, hl, hh) at half extent.
pub fn haar(x: &Map) -> (Map, Map, Map, Map) {
    let (h2, w2) = (x.h / 2, x.w / 2);
    let mut ll = Map::zeros(x.c, h2, w2);
    let mut lh = Map::zeros(x.c, h2, w2);
    let mut hl = Map::zeros(x.c, h2, w2);
    let mut hh = Map::zeros(x.c, h2, w2);
    for ch in 0..x.c {
        for by in 0..h2 {
            for bx in 0..w2 {
                let a = x.at(ch, 2 * by, 2 * bx);
                let b = x.at(ch, 2 * by, 2 * bx + 1);
                let c = x.at(ch, 2 * by + 1, 2 * bx);
                let d = x.at(ch, 2 * by + 1, 2 * bx + 1);
                ll.set(ch, by, bx, (a + b + c + d) / 2.0);
                lh.set(ch, by, bx, (a - b + c - d) / 2.0);
                hl.set(ch, by, bx, (a + b - c - d) / 2.0);
                hh.set(ch, by, bx, (a - b - c + d) / 2.0);
            }
        }
    }
    (ll, lh, hl, hh)
}

/// Inverse Haar from a low band alone (detail bands zero).
pub fn haar_inverse_ll(ll: &Map) -> Map {
    let mut out = Map::zeros(ll.c, ll.h * 2, ll.w * 2);
    for ch in 0..ll.c {
        for by in 0..ll.h {
            for bx in 0..ll.w {
                let v = ll.at(ch, by, bx) / 2.0;
                out.set(ch, 2 * by, 2 * bx, v);
                out.set(ch, 2 * by, 2 * bx + 1, v);
                out.set(ch, 2 * by + 1, 2 * bx, v);
                out.set(ch, 2 * by + 1, 2 * bx + 1, v);
            }
        }
    }
    out
}

/// Half-pixel-center bilinear resize.
pub fn bilinear(x: &Map, oh: usize, ow: usize) -> Map {
    let mut out = Map::zeros(x.c, oh, ow);
    for ch in 0..x.c {
        for oy in 0..oh {
            for ox in 0..ow {
                let sy = ((oy as f64 + 0.5) * x.h as f64 / oh as f64 - 0.5).max(0.0);
                let sx = ((ox as f64 + 0.5) * x.w as f64 / ow as f64 - 0.5).max(0.0);
                let y0 = (sy.floor() as usize).min(x.h - 1);
                let x0 = (sx.floor() as usize).min(x.w - 1);
                let y1 = (y0 + 1).min(x.h - 1);
                let x1 = (x0 + 1).min(x.w - 1);
                let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
                let v = (1.0 - fy) * (1.0 - fx) * x.at(ch, y0, x0)
                    + (1.0 - fy) * fx * x.at(ch, y0, x1)
                    + fy * (1.0 - fx) * x.at(ch, y1, x0)
                    + fy * fx * x.at(ch, y1, x1);
                out.set(ch, oy, ox, v);
            }
        }
    }
    out
}

/// Column indices sorted by descending L2 norm, lower index first on ties.
pub fn rank_columns(m: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    let norms: Vec<f64> = (0..cols)
        .map(|c| (0..rows).map(|r| m[r * cols + c].powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap().then(a.cmp(&b)));
    order
}

pub fn assert_close(got: &[f64], want: &[f64], tol: f64, what: &str) {
    assert_eq!(got.len(), want.len(), "{what}: length");
    for (i, (a, b)) in got.iter().zip(want).enumerate() {
        assert!(
            (a - b).abs() <= tol,
            "{what}[{i}]: {a} vs {b} (diff {})",
            (a - b).abs()
        );
    }
}
