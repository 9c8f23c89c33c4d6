//! Full-reference scores: PSNR, SSIM, SAM, ERGAS.

use cofusion_datasim::HyperCube;

use crate::error::{MetricError, Result};

fn check_same_dims(a: &HyperCube, b: &HyperCube, what: &str) -> Result<()> {
    if a.height != b.height || a.width != b.width || a.bands != b.bands {
        return Err(MetricError::Shape(format!(
            "{what}: {}x{}x{} vs {}x{}x{}",
            a.height, a.width, a.bands, b.height, b.width, b.bands
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB over all bands and pixels. Identical
/// inputs return the +infinity sentinel.
pub fn psnr(fused: &HyperCube, reference: &HyperCube, peak: f64) -> Result<f64> {
    check_same_dims(fused, reference, "psnr")?;
    if peak <= 0.0 {
        return Err(MetricError::Argument(format!("peak {peak} must be > 0")));
    }
    let mse: f64 = fused
        .data
        .iter()
        .zip(&reference.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / fused.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

// SSIM constants and window, matching the training objective's definition
// (unit dynamic range, 11x11 Gaussian sigma 1.5, window shrinks on small
// images). Reimplemented here with plain loops as an independent route.
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;
const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;

fn effective_window(h: usize, w: usize) -> usize {
    let m = h.min(w).min(WINDOW);
    if m.is_multiple_of(2) {
        m - 1
    } else {
        m
    }
}

fn gaussian_weights(window: usize) -> Vec<f64> {
    let half = (window / 2) as isize;
    let mut wts = vec![0.0; window * window];
    let mut sum = 0.0;
    for dy in -half..=half {
        for dx in -half..=half {
            let v = (-((dy * dy + dx * dx) as f64) / (2.0 * SIGMA * SIGMA)).exp();
            wts[(dy + half) as usize * window + (dx + half) as usize] = v;
            sum += v;
        }
    }
    for v in wts.iter_mut() {
        *v /= sum;
    }
    wts
}

fn ssim_one_band(x: &[f64], y: &[f64], h: usize, w: usize) -> f64 {
    let win = effective_window(h, w);
    let wts = gaussian_weights(win);
    let mut acc = 0.0;
    let mut count = 0usize;
    for oy in 0..=h - win {
        for ox in 0..=w - win {
            let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..win {
                for dx in 0..win {
                    let wv = wts[dy * win + dx];
                    let xv = x[(oy + dy) * w + ox + dx];
                    let yv = y[(oy + dy) * w + ox + dx];
                    mx += wv * xv;
                    my += wv * yv;
                    sxx += wv * xv * xv;
                    syy += wv * yv * yv;
                    sxy += wv * xv * yv;
                }
            }
            let (vx, vy, cxy) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
            acc += ((2.0 * mx * my + C1) * (2.0 * cxy + C2))
                / ((mx * mx + my * my + C1) * (vx + vy + C2));
            count += 1;
        }
    }
    acc / count as f64
}

/// Band-averaged structural similarity.
pub fn ssim_metric(fused: &HyperCube, reference: &HyperCube) -> Result<f64> {
    check_same_dims(fused, reference, "ssim")?;
    let win = effective_window(fused.height, fused.width);
    if win == 0 {
        return Err(MetricError::Shape(format!(
            "image {}x{} smaller than any odd window",
            fused.height, fused.width
        )));
    }
    let mut total = 0.0;
    for b in 0..fused.bands {
        total += ssim_one_band(fused.band(b), reference.band(b), fused.height, fused.width);
    }
    Ok(total / fused.bands as f64)
}

/// Mean spectral angle in degrees over pixels; pixels where either
/// spectrum has zero norm are skipped.
///
/// The angle between normalized spectra u, v is computed as
/// 2 atan2(|u - v|, |u + v|), which is well conditioned near 0 and 180
/// degrees where acos of the clamped cosine loses ~1e-8 rad.
pub fn sam(fused: &HyperCube, reference: &HyperCube) -> Result<f64> {
    check_same_dims(fused, reference, "sam")?;
    let hw = fused.height * fused.width;
    let bands = fused.bands;
    let mut total = 0.0;
    let mut counted = 0usize;
    for p in 0..hw {
        let (mut nx, mut ny) = (0.0, 0.0);
        for b in 0..bands {
            let xv = fused.data[b * hw + p];
            let yv = reference.data[b * hw + p];
            nx += xv * xv;
            ny += yv * yv;
        }
        if nx == 0.0 || ny == 0.0 {
            continue; // zero-norm pixel, skipped and counted
        }
        let (inx, iny) = (1.0 / nx.sqrt(), 1.0 / ny.sqrt());
        let (mut diff, mut sum) = (0.0, 0.0);
        for b in 0..bands {
            let u = fused.data[b * hw + p] * inx;
            let v = reference.data[b * hw + p] * iny;
            diff += (u - v) * (u - v);
            sum += (u + v) * (u + v);
        }
        total += 2.0 * diff.sqrt().atan2(sum.sqrt());
        counted += 1;
    }
    if counted == 0 {
        return Err(MetricError::Undefined(
            "sam: every pixel has a zero-norm spectrum".into(),
        ));
    }
    Ok((total / counted as f64).to_degrees())
}

/// Relative dimensionless global error:
/// 100 * scale_ratio * sqrt(mean_b(RMSE_b^2 / mean_b^2)).
pub fn ergas(fused: &HyperCube, reference: &HyperCube, scale_ratio: f64) -> Result<f64> {
    check_same_dims(fused, reference, "ergas")?;
    if scale_ratio <= 0.0 {
        return Err(MetricError::Argument(format!(
            "scale ratio {scale_ratio} must be > 0"
        )));
    }
    let hw = fused.height * fused.width;
    let mut acc = 0.0;
    for b in 0..fused.bands {
        let rb = reference.band(b);
        let fb = fused.band(b);
        let mean: f64 = rb.iter().sum::<f64>() / hw as f64;
        if mean == 0.0 {
            return Err(MetricError::Undefined(format!(
                "ergas: reference band {b} has zero mean"
            )));
        }
        let mse: f64 = fb
            .iter()
            .zip(rb)
            .map(|(a, r)| (a - r) * (a - r))
            .sum::<f64>()
            / hw as f64;
        acc += mse / (mean * mean);
    }
    Ok(100.0 * scale_ratio * (acc / fused.bands as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cofusion_datasim::{synth_cube, SynthKind};

    fn cube(seed: u64) -> HyperCube {
        synth_cube(16, 16, 4, seed, SynthKind::PiecewiseMaterials).unwrap()
    }

    #[test]
    fn psnr_identical_is_infinite_and_closed_form_holds() {
        let c = cube(1);
        assert!(psnr(&c, &c, 1.0).unwrap().is_infinite());

        // MSE = 0.01 with peak 1 -> 20 dB
        let mut noisy = c.clone();
        for v in noisy.data.iter_mut() {
            *v += 0.1;
        }
        let v = psnr(&c, &noisy, 1.0).unwrap();
        assert!((v - 20.0).abs() < 1e-9);
    }

    #[test]
    fn psnr_decreases_as_noise_grows() {
        let c = cube(2);
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let mut noisy = c.clone();
            for (i, v) in noisy.data.iter_mut().enumerate() {
                *v += 0.01 * k as f64 * if i % 2 == 0 { 1.0 } else { -1.0 };
            }
            let p = psnr(&c, &noisy, 1.0).unwrap();
            assert!(p < prev, "not monotone at k={k}");
            prev = p;
        }
    }

    #[test]
    fn psnr_matches_direct_mse_oracle() {
        let a = cube(3);
        let b = cube(4);
        let got = psnr(&a, &b, 1.0).unwrap();
        let mse: f64 = a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            / a.data.len() as f64;
        assert!((got - 10.0 * (1.0 / mse).log10()).abs() < 1e-9);
    }

    #[test]
    fn ssim_identity_and_noise() {
        let c = cube(5);
        assert_eq!(ssim_metric(&c, &c).unwrap(), 1.0);
        let mut noisy = c.clone();
        let mut state = 9u64;
        for v in noisy.data.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            *v += ((state >> 33) as f64 / (1u64 << 31) as f64 - 0.5) * 0.6;
        }
        assert!(ssim_metric(&c, &noisy).unwrap() < 1.0);
    }

    #[test]
    fn sam_identity_scale_invariance_and_orthogonality() {
        let c = cube(6);
        let mut shifted = c.clone();
        for v in shifted.data.iter_mut() {
            *v += 0.05; // keep spectra nonzero
        }
        assert!(sam(&shifted, &shifted).unwrap().abs() < 1e-12);

        let mut scaled = shifted.clone();
        for v in scaled.data.iter_mut() {
            *v *= 2.7;
        }
        assert!(sam(&shifted, &scaled).unwrap().abs() < 1e-9);
        // symmetry
        let other = {
            let mut o = cube(7);
            for v in o.data.iter_mut() {
                *v += 0.05;
            }
            o
        };
        let ab = sam(&shifted, &other).unwrap();
        let ba = sam(&other, &shifted).unwrap();
        assert!((ab - ba).abs() < 1e-12);

        // orthogonal 2-band spectra -> 90 degrees
        let x = HyperCube::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let y = HyperCube::new(1, 1, 2, vec![0.0, 1.0]).unwrap();
        assert!((sam(&x, &y).unwrap() - 90.0).abs() < 1e-12);
    }

    #[test]
    fn sam_all_zero_is_undefined() {
        let z = HyperCube::zeros(4, 4, 3);
        assert!(matches!(sam(&z, &z), Err(MetricError::Undefined(_))));
    }

    #[test]
    fn ergas_identity_closed_form_and_ratio_linearity() {
        let c = cube(8);
        assert_eq!(ergas(&c, &c, 0.25).unwrap(), 0.0);

        // single band with RMSE = 0.1 * mean at ratio 1/4 -> 2.5
        let reference = HyperCube::new(2, 2, 1, vec![0.5; 4]).unwrap();
        let fused = HyperCube::new(2, 2, 1, vec![0.55, 0.45, 0.55, 0.45]).unwrap();
        let v = ergas(&fused, &reference, 0.25).unwrap();
        assert!((v - 2.5).abs() < 1e-9);

        let at_half = ergas(&fused, &reference, 0.5).unwrap();
        assert!((at_half - 2.0 * v).abs() < 1e-12);
    }

    #[test]
    fn ergas_matches_direct_formula_oracle() {
        let a = synth_cube(8, 8, 4, 10, SynthKind::GaussianBlobs).unwrap();
        let b = synth_cube(8, 8, 4, 11, SynthKind::GaussianBlobs).unwrap();
        let got = ergas(&a, &b, 0.25).unwrap();
        let mut acc = 0.0;
        for band in 0..4 {
            let mean: f64 = b.band(band).iter().sum::<f64>() / 64.0;
            let mse: f64 = a
                .band(band)
                .iter()
                .zip(b.band(band))
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                / 64.0;
            acc += mse / (mean * mean);
        }
        let want = 100.0 * 0.25 * (acc / 4.0).sqrt();
        assert!((got - want).abs() < 1e-9);
    }

    #[test]
    fn ergas_zero_band_mean_is_undefined_naming_band() {
        let reference = HyperCube::zeros(4, 4, 2);
        let fused = HyperCube::new(4, 4, 2, vec![0.1; 32]).unwrap();
        match ergas(&fused, &reference, 0.25) {
            Err(MetricError::Undefined(msg)) => assert!(msg.contains("band 0")),
            other => panic!("expected Undefined, got {other:?}"),
        }
    }
}
