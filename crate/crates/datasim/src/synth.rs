//! Deterministic synthetic hyperspectral scenes.

use cofusion_tensor::Rng;

use crate::cube::HyperCube;
use crate::error::{DataError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Smooth sum of spatial Gaussian bumps with per-bump spectra.
    GaussianBlobs,
    /// Voronoi label map with one smooth random spectrum per region:
    /// sharp spatial edges, identical spectra within a cell.
    PiecewiseMaterials,
}

impl std::str::FromStr for SynthKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-blobs" => Ok(SynthKind::GaussianBlobs),
            "piecewise-materials" => Ok(SynthKind::PiecewiseMaterials),
            other => Err(DataError::Argument(format!(
                "unknown synth kind '{other}' (expected gaussian-blobs or piecewise-materials)"
            ))),
        }
    }
}

/// Smooth spectrum over band indices: sum of 3 Gaussians.
fn random_spectrum(rng: &mut Rng, bands: usize) -> Vec<f64> {
    let b = bands as f64;
    let mut centers = [0.0; 3];
    let mut widths = [0.0; 3];
    let mut amps = [0.0; 3];
    for j in 0..3 {
        centers[j] = rng.range(0.0, b - 1.0);
        widths[j] = rng.range(b / 10.0, b / 3.0).max(0.4);
        amps[j] = rng.range(0.2, 1.0);
    }
    (0..bands)
        .map(|i| {
            let mut v = 0.0;
            for j in 0..3 {
                let d = i as f64 - centers[j];
                v += amps[j] * (-d * d / (2.0 * widths[j] * widths[j])).exp();
            }
            v
        })
        .collect()
}

/// Nearest Voronoi seed, ties to the lower seed index.
pub fn voronoi_label(seeds: &[(f64, f64)], y: f64, x: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &(sy, sx)) in seeds.iter().enumerate() {
        let d = (y - sy) * (y - sy) + (x - sx) * (x - sx);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Seed points of the Voronoi partition for a given cube seed, exposed so
/// tests can recompute the label map independently.
pub fn voronoi_seeds(height: usize, width: usize, seed: u64, count: usize) -> Vec<(f64, f64)> {
    let mut rng = Rng::seed(Rng::derive(seed, 0x564f524f)); // "VORO"
    (0..count)
        .map(|_| (rng.range(0.0, height as f64), rng.range(0.0, width as f64)))
        .collect()
}

const VORONOI_REGIONS: usize = 8;

/// Deterministic synthetic scene, normalized to [0,1] and quantized through
/// f32 so the HSC round trip is bit-exact.
pub fn synth_cube(
    height: usize,
    width: usize,
    bands: usize,
    seed: u64,
    kind: SynthKind,
) -> Result<HyperCube> {
    if height < 8 || width < 8 {
        return Err(DataError::Argument(format!(
            "dims must be >= 8, got {height}x{width}"
        )));
    }
    if bands < 2 {
        return Err(DataError::Argument(format!(
            "at least 2 bands required, got {bands}"
        )));
    }
    let mut cube = HyperCube::zeros(height, width, bands);
    match kind {
        SynthKind::PiecewiseMaterials => {
            let seeds = voronoi_seeds(height, width, seed, VORONOI_REGIONS);
            let mut rng = Rng::seed(Rng::derive(seed, 0x53504543)); // "SPEC"
            let spectra: Vec<Vec<f64>> = (0..VORONOI_REGIONS)
                .map(|_| random_spectrum(&mut rng, bands))
                .collect();
            for y in 0..height {
                for x in 0..width {
                    let label = voronoi_label(&seeds, y as f64, x as f64);
                    for (b, v) in spectra[label].iter().enumerate() {
                        *cube.at_mut(b, y, x) = *v;
                    }
                }
            }
        }
        SynthKind::GaussianBlobs => {
            let mut rng = Rng::seed(Rng::derive(seed, 0x424c4f42)); // "BLOB"
            let blobs = 6;
            for _ in 0..blobs {
                let cy = rng.range(0.0, height as f64);
                let cx = rng.range(0.0, width as f64);
                let sigma = rng.range(height.min(width) as f64 / 8.0, height.min(width) as f64 / 3.0);
                let spectrum = random_spectrum(&mut rng, bands);
                for y in 0..height {
                    for x in 0..width {
                        let d2 = (y as f64 - cy) * (y as f64 - cy)
                            + (x as f64 - cx) * (x as f64 - cx);
                        let spatial = (-d2 / (2.0 * sigma * sigma)).exp();
                        for (b, v) in spectrum.iter().enumerate() {
                            *cube.at_mut(b, y, x) += spatial * v;
                        }
                    }
                }
            }
        }
    }

    // global min-max normalization to [0,1]; affine, so identical spectra
    // within a Voronoi cell stay identical
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &cube.data {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    for v in cube.data.iter_mut() {
        *v = (*v - lo) / span;
    }
    Ok(cube.quantize_f32())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        for kind in [SynthKind::GaussianBlobs, SynthKind::PiecewiseMaterials] {
            let a = synth_cube(16, 16, 4, 42, kind).unwrap();
            let b = synth_cube(16, 16, 4, 42, kind).unwrap();
            assert_eq!(a.data, b.data);
            let c = synth_cube(16, 16, 4, 43, kind).unwrap();
            assert_ne!(a.data, c.data);
        }
    }

    #[test]
    fn values_normalized_to_unit_interval() {
        for seed in 0..5 {
            let c = synth_cube(16, 16, 6, seed, SynthKind::PiecewiseMaterials).unwrap();
            assert!(c.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn same_cell_pixels_share_spectra() {
        let seed = 11;
        let c = synth_cube(24, 24, 5, seed, SynthKind::PiecewiseMaterials).unwrap();
        // recompute the label map from the exposed seed points
        let seeds = voronoi_seeds(24, 24, seed, VORONOI_REGIONS);
        let mut rep: Vec<Option<(usize, usize)>> = vec![None; VORONOI_REGIONS];
        for y in 0..24 {
            for x in 0..24 {
                let label = voronoi_label(&seeds, y as f64, x as f64);
                match rep[label] {
                    None => rep[label] = Some((y, x)),
                    Some((ry, rx)) => {
                        for b in 0..5 {
                            assert_eq!(c.at(b, y, x), c.at(b, ry, rx));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn small_dims_and_single_band_rejected() {
        assert!(synth_cube(4, 16, 4, 0, SynthKind::GaussianBlobs).is_err());
        assert!(synth_cube(16, 16, 1, 0, SynthKind::GaussianBlobs).is_err());
    }
}
