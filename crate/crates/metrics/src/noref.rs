//! No-reference quality: the universal image quality index on 32x32
//! blocks, the spectral and spatial distortion indices built from it, and
//! their product.
//!
//! The low-resolution side of the spectral index compares the fused image
//! after Wald degradation against the original spectral input, so a fused
//! image whose degradation reproduces the input scores exactly zero.

use cofusion_datasim::{wald_degrade, DegradationSpec, HyperCube};

use crate::error::{MetricError, Result};

/// Block extent of the quality index.
pub const Q_BLOCK: usize = 32;

/// Universal image quality index of one block pair, with the conventional
/// degenerate-case handling.
fn q_block(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx: f64 = x.iter().sum::<f64>() / n;
    let my: f64 = y.iter().sum::<f64>() / n;
    let mut vx = 0.0;
    let mut vy = 0.0;
    let mut cxy = 0.0;
    for i in 0..x.len() {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    vx /= n;
    vy /= n;
    cxy /= n;

    let var_sum = vx + vy;
    let mean_sq = mx * mx + my * my;
    if var_sum == 0.0 && mean_sq == 0.0 {
        1.0
    } else if var_sum == 0.0 {
        2.0 * mx * my / mean_sq
    } else if mean_sq == 0.0 {
        2.0 * cxy / var_sum
    } else {
        4.0 * cxy * mx * my / (var_sum * mean_sq)
    }
}

/// Q index of two equal-sized single-band images, averaged over 32x32
/// tiles (edge tiles take the remainder).
pub fn q_index(x: &[f64], y: &[f64], h: usize, w: usize) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut y0 = 0;
    while y0 < h {
        let bh = Q_BLOCK.min(h - y0);
        let mut x0 = 0;
        while x0 < w {
            let bw = Q_BLOCK.min(w - x0);
            let mut bx = Vec::with_capacity(bh * bw);
            let mut by = Vec::with_capacity(bh * bw);
            for r in 0..bh {
                for c in 0..bw {
                    bx.push(x[(y0 + r) * w + x0 + c]);
                    by.push(y[(y0 + r) * w + x0 + c]);
                }
            }
            acc += q_block(&bx, &by);
            count += 1;
            x0 += Q_BLOCK;
        }
        y0 += Q_BLOCK;
    }
    acc / count as f64
}

fn infer_scale(hi: usize, lo: usize, what: &str) -> Result<usize> {
    if lo == 0 || !hi.is_multiple_of(lo) || hi / lo < 2 {
        return Err(MetricError::Shape(format!(
            "{what}: high-res extent {hi} is not an integer multiple (>=2) of low-res {lo}"
        )));
    }
    Ok(hi / lo)
}

/// Spectral distortion: mean absolute difference of inter-band Q values
/// between the degraded fused image and the spectral input (p = 1).
pub fn d_lambda(fused: &HyperCube, lrhsi: &HyperCube) -> Result<f64> {
    if fused.bands != lrhsi.bands {
        return Err(MetricError::Shape(format!(
            "band mismatch: fused {} vs lrhsi {}",
            fused.bands, lrhsi.bands
        )));
    }
    if fused.bands < 2 {
        return Err(MetricError::Undefined(
            "spectral distortion needs at least 2 bands".into(),
        ));
    }
    let scale = infer_scale(fused.height, lrhsi.height, "d_lambda")?;
    if fused.width != lrhsi.width * scale {
        return Err(MetricError::Shape(format!(
            "d_lambda: width ratio differs from height ratio {scale}"
        )));
    }
    let spec = DegradationSpec::for_scale(scale, fused.bands, 1)?;
    let degraded = wald_degrade(fused, &spec)?;

    let (h, w, bands) = (lrhsi.height, lrhsi.width, lrhsi.bands);
    let mut acc = 0.0;
    let mut pairs = 0usize;
    for i in 0..bands {
        for j in 0..bands {
            if i == j {
                continue;
            }
            let qf = q_index(degraded.band(i), degraded.band(j), h, w);
            let ql = q_index(lrhsi.band(i), lrhsi.band(j), h, w);
            acc += (qf - ql).abs();
            pairs += 1;
        }
    }
    Ok(acc / pairs as f64)
}

/// Band-mean intensity image of a cube.
fn intensity(cube: &HyperCube) -> HyperCube {
    let hw = cube.height * cube.width;
    let mut data = vec![0.0; hw];
    for b in 0..cube.bands {
        let band = cube.band(b);
        for p in 0..hw {
            data[p] += band[p];
        }
    }
    for v in data.iter_mut() {
        *v /= cube.bands as f64;
    }
    HyperCube::new(cube.height, cube.width, 1, data).expect("intensity dims")
}

/// Spatial distortion: mean over fused bands of |Q(fused_b, P) -
/// Q(lrhsi_b, P degraded)| where P is the intensity of the spatial input
/// (q = 1).
pub fn d_s(fused: &HyperCube, hrmsi: &HyperCube, lrhsi: &HyperCube) -> Result<f64> {
    if fused.height != hrmsi.height || fused.width != hrmsi.width {
        return Err(MetricError::Shape(format!(
            "d_s: fused {}x{} vs hrmsi {}x{}",
            fused.height, fused.width, hrmsi.height, hrmsi.width
        )));
    }
    if fused.bands != lrhsi.bands {
        return Err(MetricError::Shape(format!(
            "d_s: fused has {} bands, lrhsi {}",
            fused.bands, lrhsi.bands
        )));
    }
    let scale = infer_scale(fused.height, lrhsi.height, "d_s")?;
    if fused.width != lrhsi.width * scale {
        return Err(MetricError::Shape(
            "d_s: width ratio differs from height ratio".into(),
        ));
    }
    let pan = intensity(hrmsi);
    let spec = DegradationSpec::for_scale(scale, 1, 1)?;
    let pan_lo = wald_degrade(&pan, &spec)?;

    let mut acc = 0.0;
    for b in 0..fused.bands {
        let q_hi = q_index(fused.band(b), pan.band(0), fused.height, fused.width);
        let q_lo = q_index(lrhsi.band(b), pan_lo.band(0), lrhsi.height, lrhsi.width);
        acc += (q_hi - q_lo).abs();
    }
    Ok(acc / fused.bands as f64)
}

/// (1 - d_lambda) * (1 - d_s), both exponents 1.
pub fn qnr(d_lambda: f64, d_s: f64) -> Result<f64> {
    for (name, v) in [("d_lambda", d_lambda), ("d_s", d_s)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricError::Argument(format!("{name} {v} outside [0,1]")));
        }
    }
    Ok((1.0 - d_lambda) * (1.0 - d_s))
}
