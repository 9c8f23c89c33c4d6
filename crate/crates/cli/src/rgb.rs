//! False-color PPM (P6) dumps of three chosen bands.

use std::io::Write;
use std::path::Path;

use cofusion_datasim::HyperCube;

use crate::error::{usage, Result};

pub fn default_bands(bands: usize) -> (usize, usize, usize) {
    (bands - 1, bands / 2, 0)
}

pub fn write_ppm(path: &Path, cube: &HyperCube, rgb: (usize, usize, usize)) -> Result<()> {
    for b in [rgb.0, rgb.1, rgb.2] {
        if b >= cube.bands {
            return usage(format!(
                "rgb band {b} out of range (cube has {} bands)",
                cube.bands
            ));
        }
    }
    let mut out = Vec::with_capacity(32 + cube.height * cube.width * 3);
    out.extend_from_slice(format!("P6\n{} {}\n255\n", cube.width, cube.height).as_bytes());
    for y in 0..cube.height {
        for x in 0..cube.width {
            for b in [rgb.0, rgb.1, rgb.2] {
                let v = (cube.at(b, y, x).clamp(0.0, 1.0) * 255.0).round() as u8;
                out.push(v);
            }
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

/// Parse "r,g,b" band indices.
pub fn parse_bands(raw: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return usage(format!("--rgb-bands wants 'r,g,b', got '{raw}'"));
    }
    let mut idx = [0usize; 3];
    for (i, p) in parts.iter().enumerate() {
        idx[i] = p
            .trim()
            .parse()
            .or_else(|_| usage(format!("bad band index '{p}'")))?;
    }
    Ok((idx[0], idx[1], idx[2]))
}
