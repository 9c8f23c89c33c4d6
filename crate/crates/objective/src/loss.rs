//! L1 + SSIM training objective, differentiable end to end.

use cofusion_tensor::{Graph, Tensor};

use crate::error::{ObjectiveError, Result};

/// SSIM stabilizers for unit dynamic range.
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
/// Default Gaussian window: 11 x 11, sigma 1.5.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;

/// Component values of one loss evaluation. `total` is the exact
/// floating-point composition l1 + lambda * ssim_loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub l1: f64,
    pub ssim_loss: f64,
    pub total: f64,
    pub lambda: f64,
}

/// Window actually used for an image: the default shrinks to the largest
/// odd extent that fits, so small tiles stay scoreable.
pub fn effective_window(h: usize, w: usize, window: usize) -> usize {
    let m = h.min(w).min(window);
    if m.is_multiple_of(2) {
        m - 1
    } else {
        m
    }
}

/// Normalized 2-D Gaussian weights for a window.
pub fn gaussian_window(window: usize, sigma: f64) -> Vec<f64> {
    let half = (window / 2) as isize;
    let mut wts = vec![0.0; window * window];
    let mut sum = 0.0;
    for dy in -half..=half {
        for dx in -half..=half {
            let v = (-((dy * dy + dx * dx) as f64) / (2.0 * sigma * sigma)).exp();
            wts[(dy + half) as usize * window + (dx + half) as usize] = v;
            sum += v;
        }
    }
    for v in wts.iter_mut() {
        *v /= sum;
    }
    wts
}

/// Mean absolute error over all bands and pixels.
pub fn l1_loss(g: &Graph, pred: &Tensor, reference: &Tensor) -> Result<Tensor> {
    if pred.shape() != reference.shape() {
        return Err(ObjectiveError::Shape(format!(
            "l1: {:?} vs {:?}",
            pred.shape(),
            reference.shape()
        )));
    }
    Ok(g.mean_all(&g.abs(&g.sub(pred, reference)?)?)?)
}

/// Mean SSIM over the sliding Gaussian windows of a [C, H, W] pair,
/// computed through the differentiable local-moment pipeline. Windows are
/// "valid" (fully inside the image).
fn ssim_mean(
    g: &Graph,
    x: &Tensor,
    y: &Tensor,
    window: usize,
    sigma: f64,
    c1: f64,
    c2: f64,
) -> Result<Tensor> {
    let (c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    if window.is_multiple_of(2) || window == 0 {
        return Err(ObjectiveError::Shape(format!("window {window} must be odd")));
    }
    if h < window || w < window {
        return Err(ObjectiveError::Shape(format!(
            "image {h}x{w} smaller than window {window}"
        )));
    }
    let wts = gaussian_window(window, sigma);
    let mut per_channel = Vec::with_capacity(c * window * window);
    for _ in 0..c {
        per_channel.extend_from_slice(&wts);
    }
    let kernel = Tensor::constant(vec![c, window, window], per_channel)?;
    let wmean = |t: &Tensor| g.conv2d_depthwise_padded(t, &kernel, 1, 1, 0);

    let mu_x = wmean(x)?;
    let mu_y = wmean(y)?;
    let sxx = wmean(&g.mul(x, x)?)?;
    let syy = wmean(&g.mul(y, y)?)?;
    let sxy = wmean(&g.mul(x, y)?)?;

    let mu_x2 = g.mul(&mu_x, &mu_x)?;
    let mu_y2 = g.mul(&mu_y, &mu_y)?;
    let mu_xy = g.mul(&mu_x, &mu_y)?;
    let var_x = g.sub(&sxx, &mu_x2)?;
    let var_y = g.sub(&syy, &mu_y2)?;
    let cov = g.sub(&sxy, &mu_xy)?;

    let num = g.mul(
        &g.add_scalar(&g.scale(&mu_xy, 2.0)?, c1)?,
        &g.add_scalar(&g.scale(&cov, 2.0)?, c2)?,
    )?;
    let den = g.mul(
        &g.add_scalar(&g.add(&mu_x2, &mu_y2)?, c1)?,
        &g.add_scalar(&g.add(&var_x, &var_y)?, c2)?,
    )?;
    Ok(g.mean_all(&g.div(&num, &den)?)?)
}

/// SSIM of one band pair with an explicit window, as a plain value.
pub fn ssim_band(x: &Tensor, y: &Tensor, window: usize, c1: f64, c2: f64) -> Result<f64> {
    if x.ndim() != 2 || y.ndim() != 2 || x.shape() != y.shape() {
        return Err(ObjectiveError::Shape(format!(
            "ssim_band expects matching [H,W], got {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let (h, w) = (x.shape()[0], x.shape()[1]);
    let g = Graph::inference();
    let x3 = g.reshape(x, vec![1, h, w])?;
    let y3 = g.reshape(y, vec![1, h, w])?;
    Ok(ssim_mean(&g, &x3, &y3, window, SSIM_SIGMA, c1, c2)?.item())
}

/// 1 - band-averaged SSIM, differentiable. The window shrinks on images
/// smaller than the 11 x 11 default.
pub fn ssim_loss(g: &Graph, pred: &Tensor, reference: &Tensor) -> Result<Tensor> {
    if pred.shape() != reference.shape() || pred.ndim() != 3 {
        return Err(ObjectiveError::Shape(format!(
            "ssim_loss: {:?} vs {:?}",
            pred.shape(),
            reference.shape()
        )));
    }
    let window = effective_window(pred.shape()[1], pred.shape()[2], SSIM_WINDOW);
    let mean = ssim_mean(g, pred, reference, window, SSIM_SIGMA, SSIM_C1, SSIM_C2)?;
    Ok(g.add_scalar(&g.scale(&mean, -1.0)?, 1.0)?)
}

/// Combined objective: total = l1 + lambda * ssim_loss. Returns the scalar
/// tensor to differentiate and the component values.
pub fn total_loss(
    g: &Graph,
    pred: &Tensor,
    reference: &Tensor,
    lambda: f64,
) -> Result<(Tensor, LossBreakdown)> {
    if lambda < 0.0 {
        return Err(ObjectiveError::Data(format!("lambda {lambda} must be >= 0")));
    }
    let l1 = l1_loss(g, pred, reference)?;
    let ssim = ssim_loss(g, pred, reference)?;
    let total = g.add(&l1, &g.scale(&ssim, lambda)?)?;
    let breakdown = LossBreakdown {
        l1: l1.item(),
        ssim_loss: ssim.item(),
        total: total.item(),
        lambda,
    };
    Ok((total, breakdown))
}
