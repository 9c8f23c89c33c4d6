//! Wald-protocol degradation: Gaussian blur, decimation, and spectral
//! response projection.

use crate::cube::HyperCube;
use crate::error::{DataError, Result};

/// Row-stochastic spectral response matrix [msi_bands x hsi_bands].
#[derive(Debug, Clone, PartialEq)]
pub struct Srf {
    pub msi_bands: usize,
    pub hsi_bands: usize,
    /// Row-major weights.
    pub weights: Vec<f64>,
}

impl Srf {
    pub fn new(msi_bands: usize, hsi_bands: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != msi_bands * hsi_bands {
            return Err(DataError::Dimension(format!(
                "srf {}x{} needs {} weights, got {}",
                msi_bands,
                hsi_bands,
                msi_bands * hsi_bands,
                weights.len()
            )));
        }
        for r in 0..msi_bands {
            let row = &weights[r * hsi_bands..(r + 1) * hsi_bands];
            if row.iter().any(|&w| w < 0.0) {
                return Err(DataError::Argument(format!("srf row {r} has negative weight")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(DataError::Argument(format!(
                    "srf row {r} sums to {sum}, want 1"
                )));
            }
        }
        Ok(Srf {
            msi_bands,
            hsi_bands,
            weights,
        })
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.hsi_bands..(r + 1) * self.hsi_bands]
    }
}

/// Overlapping Gaussian responses centered uniformly over the band index
/// range, each row normalized to sum 1.
pub fn default_srf(hsi_bands: usize, msi_bands: usize) -> Result<Srf> {
    if msi_bands == 0 || msi_bands > hsi_bands {
        return Err(DataError::Argument(format!(
            "msi bands {msi_bands} must be in 1..={hsi_bands}"
        )));
    }
    let spacing = hsi_bands as f64 / msi_bands as f64;
    let sigma = spacing / 2.0;
    let mut weights = vec![0.0; msi_bands * hsi_bands];
    for m in 0..msi_bands {
        let center = (m as f64 + 0.5) * spacing - 0.5;
        let mut sum = 0.0;
        for b in 0..hsi_bands {
            let d = b as f64 - center;
            let w = (-d * d / (2.0 * sigma * sigma)).exp();
            weights[m * hsi_bands + b] = w;
            sum += w;
        }
        for b in 0..hsi_bands {
            weights[m * hsi_bands + b] /= sum;
        }
    }
    Srf::new(msi_bands, hsi_bands, weights)
}

/// Gaussian blur + downsampling parameters for the Wald simulation.
#[derive(Debug, Clone)]
pub struct DegradationSpec {
    /// Blur standard deviation in pixels.
    pub blur_sigma: f64,
    /// Odd kernel extent, at least ceil(6 * sigma) rounded up to odd.
    pub kernel_size: usize,
    pub scale: usize,
    pub srf: Srf,
}

impl DegradationSpec {
    pub fn new(blur_sigma: f64, kernel_size: usize, scale: usize, srf: Srf) -> Result<Self> {
        if blur_sigma <= 0.0 {
            return Err(DataError::Argument("blur sigma must be > 0".into()));
        }
        if scale < 2 {
            return Err(DataError::Argument("scale must be >= 2".into()));
        }
        let min_k = min_kernel_size(blur_sigma);
        if kernel_size.is_multiple_of(2) || kernel_size < min_k {
            return Err(DataError::Argument(format!(
                "kernel size {kernel_size} must be odd and >= {min_k} for sigma {blur_sigma}"
            )));
        }
        Ok(DegradationSpec {
            blur_sigma,
            kernel_size,
            scale,
            srf,
        })
    }

    /// Conventional defaults: sigma = scale/2, matching kernel, Gaussian SRF.
    pub fn for_scale(scale: usize, hsi_bands: usize, msi_bands: usize) -> Result<Self> {
        let sigma = scale as f64 / 2.0;
        Self::new(
            sigma,
            min_kernel_size(sigma),
            scale,
            default_srf(hsi_bands, msi_bands)?,
        )
    }
}

/// ceil(6 sigma) rounded up to odd.
pub fn min_kernel_size(sigma: f64) -> usize {
    let k = (6.0 * sigma).ceil() as usize;
    if k.is_multiple_of(2) {
        k + 1
    } else {
        k.max(1)
    }
}

fn mirror(i: isize, len: usize) -> usize {
    let len = len as isize;
    let mut i = i;
    while i < 0 || i >= len {
        if i < 0 {
            i = -i;
        }
        if i >= len {
            i = 2 * len - 2 - i;
        }
    }
    i as usize
}

fn gaussian_kernel_2d(sigma: f64, k: usize) -> Vec<f64> {
    let half = (k / 2) as isize;
    let mut kern = vec![0.0; k * k];
    let mut sum = 0.0;
    for dy in -half..=half {
        for dx in -half..=half {
            let w = (-((dy * dy + dx * dx) as f64) / (2.0 * sigma * sigma)).exp();
            kern[(dy + half) as usize * k + (dx + half) as usize] = w;
            sum += w;
        }
    }
    for w in kern.iter_mut() {
        *w /= sum;
    }
    kern
}

/// Per-band 2-D Gaussian blur (reflect padding, normalized kernel) followed
/// by decimation keeping pixel (scale/2, scale/2) of each block.
pub fn wald_degrade(gt: &HyperCube, spec: &DegradationSpec) -> Result<HyperCube> {
    let s = spec.scale;
    if !gt.height.is_multiple_of(s) || !gt.width.is_multiple_of(s) {
        return Err(DataError::Dimension(format!(
            "{}x{} not divisible by scale {s}",
            gt.height, gt.width
        )));
    }
    let (h, w) = (gt.height, gt.width);
    let (oh, ow) = (h / s, w / s);
    let k = spec.kernel_size;
    let half = (k / 2) as isize;
    let kern = gaussian_kernel_2d(spec.blur_sigma, k);
    let offset = s / 2;

    let mut out = HyperCube::zeros(oh, ow, gt.bands);
    for b in 0..gt.bands {
        let src = gt.band(b);
        for oy in 0..oh {
            let cy = (oy * s + offset) as isize;
            for ox in 0..ow {
                let cx = (ox * s + offset) as isize;
                let mut acc = 0.0;
                for dy in -half..=half {
                    let iy = mirror(cy + dy, h);
                    let krow = (dy + half) as usize * k;
                    for dx in -half..=half {
                        let ix = mirror(cx + dx, w);
                        acc += kern[krow + (dx + half) as usize] * src[iy * w + ix];
                    }
                }
                *out.at_mut(b, oy, ox) = acc;
            }
        }
    }
    out.wavelengths_nm = gt.wavelengths_nm.clone();
    Ok(out)
}

/// Project each pixel's spectrum through the SRF; spatial dims preserved.
pub fn apply_srf(gt: &HyperCube, srf: &Srf) -> Result<HyperCube> {
    if srf.hsi_bands != gt.bands {
        return Err(DataError::Dimension(format!(
            "srf expects {} bands, cube has {}",
            srf.hsi_bands, gt.bands
        )));
    }
    let hw = gt.height * gt.width;
    let mut out = HyperCube::zeros(gt.height, gt.width, srf.msi_bands);
    for m in 0..srf.msi_bands {
        let row = srf.row(m);
        let dst = &mut out.data[m * hw..(m + 1) * hw];
        for (b, &wgt) in row.iter().enumerate() {
            if wgt == 0.0 {
                continue;
            }
            let src = gt.band(b);
            for p in 0..hw {
                dst[p] += wgt * src[p];
            }
        }
    }
    Ok(out)
}
