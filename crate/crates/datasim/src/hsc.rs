//! The HSC cube format.
//!
//! Layout: bytes 0-3 magic "HSC1"; bytes 4-15 three u32 little-endian
//! (height, width, bands); then height*width*bands IEEE-754 f32 LE values
//! in band-major (band, row, col) order. Wavelength metadata, when present,
//! lives in a sidecar "<file>.json" holding {"wavelengths_nm": [...]}.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::cube::HyperCube;
use crate::error::{DataError, Result};

const MAGIC: [u8; 4] = *b"HSC1";

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

pub fn write_hsc(path: &Path, cube: &HyperCube) -> Result<()> {
    if cube.data.iter().any(|v| !v.is_finite()) {
        return Err(DataError::Argument(
            "refusing to write non-finite values".into(),
        ));
    }
    let mut buf = Vec::with_capacity(16 + cube.data.len() * 4);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&(cube.height as u32).to_le_bytes());
    buf.extend_from_slice(&(cube.width as u32).to_le_bytes());
    buf.extend_from_slice(&(cube.bands as u32).to_le_bytes());
    for &v in &cube.data {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;

    if let Some(wl) = &cube.wavelengths_nm {
        let items: Vec<String> = wl.iter().map(|v| format!("{v}")).collect();
        let json = format!("{{\"wavelengths_nm\": [{}]}}", items.join(", "));
        fs::write(sidecar_path(path), json)?;
    }
    Ok(())
}

pub fn read_hsc(path: &Path) -> Result<HyperCube> {
    let mut f = fs::File::open(path)?;
    let mut header = [0u8; 16];
    let got = read_up_to(&mut f, &mut header)?;
    if got < 4 {
        return Err(DataError::BadMagic {
            found: [
                *header.first().unwrap_or(&0),
                *header.get(1).unwrap_or(&0),
                *header.get(2).unwrap_or(&0),
                *header.get(3).unwrap_or(&0),
            ],
        });
    }
    if header[..4] != MAGIC {
        return Err(DataError::BadMagic {
            found: [header[0], header[1], header[2], header[3]],
        });
    }
    if got < 16 {
        return Err(DataError::PayloadSize {
            expected: 16,
            actual: got as u64,
        });
    }
    let height = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let width = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let bands = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let expected = height
        .checked_mul(width)
        .and_then(|v| v.checked_mul(bands))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| {
            DataError::Dimension(format!(
                "header dims {height}x{width}x{bands} overflow the payload size"
            ))
        })? as u64;

    let mut payload = Vec::new();
    f.read_to_end(&mut payload)?;
    if payload.len() as u64 != expected {
        return Err(DataError::PayloadSize {
            expected,
            actual: payload.len() as u64,
        });
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let mut cube = HyperCube::new(height, width, bands, data)?;

    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let text = fs::read_to_string(&sidecar)?;
        cube.wavelengths_nm = Some(parse_wavelengths(&text)?);
        if cube.wavelengths_nm.as_ref().unwrap().len() != bands {
            return Err(DataError::Dimension(format!(
                "sidecar has {} wavelengths for {} bands",
                cube.wavelengths_nm.as_ref().unwrap().len(),
                bands
            )));
        }
    }
    Ok(cube)
}

fn read_up_to(f: &mut fs::File, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        let n = f.read(&mut buf[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    Ok(filled)
}

/// Minimal parser for the sidecar's single-key JSON object.
fn parse_wavelengths(text: &str) -> Result<Vec<f64>> {
    let open = text
        .find('[')
        .ok_or_else(|| DataError::Argument("sidecar json missing array".into()))?;
    let close = text[open..]
        .find(']')
        .ok_or_else(|| DataError::Argument("sidecar json missing ']'".into()))?
        + open;
    text[open + 1..close]
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| DataError::Argument(format!("bad wavelength '{}': {e}", s.trim())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_cube, SynthKind};

    fn tmpdir() -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!(
            "hsc_test_{}_{}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let d = tmpdir();
        let path = d.join("cube.hsc");
        let cube = synth_cube(8, 9, 3, 5, SynthKind::PiecewiseMaterials).unwrap();
        write_hsc(&path, &cube).unwrap();
        let back = read_hsc(&path).unwrap();
        assert_eq!(back.height, 8);
        assert_eq!(back.width, 9);
        assert_eq!(back.bands, 3);
        assert_eq!(back.data, cube.data); // synth cubes are f32-quantized
        fs::remove_dir_all(d).ok();
    }

    #[test]
    fn wavelength_sidecar_round_trips() {
        let d = tmpdir();
        let path = d.join("wl.hsc");
        let cube = HyperCube::zeros(8, 8, 3)
            .with_wavelengths(vec![450.5, 550.0, 650.25])
            .unwrap();
        write_hsc(&path, &cube).unwrap();
        assert!(d.join("wl.hsc.json").exists());
        let back = read_hsc(&path).unwrap();
        assert_eq!(back.wavelengths_nm, Some(vec![450.5, 550.0, 650.25]));
        fs::remove_dir_all(d).ok();
    }

    #[test]
    fn corrupted_magic_is_reported() {
        let d = tmpdir();
        let path = d.join("bad.hsc");
        let cube = HyperCube::zeros(8, 8, 2);
        write_hsc(&path, &cube).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        match read_hsc(&path) {
            Err(DataError::BadMagic { .. }) => {}
            other => panic!("expected BadMagic, got {other:?}"),
        }
        fs::remove_dir_all(d).ok();
    }

    #[test]
    fn absurd_header_dims_error_instead_of_panicking() {
        let d = tmpdir();
        let path = d.join("huge.hsc");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"HSC1");
        for _ in 0..3 {
            bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        }
        fs::write(&path, &bytes).unwrap();
        match read_hsc(&path) {
            Err(DataError::Dimension(_)) | Err(DataError::PayloadSize { .. }) => {}
            other => panic!("expected dimension/payload error, got {other:?}"),
        }
        fs::remove_dir_all(d).ok();
    }

    #[test]
    fn truncation_names_expected_and_actual() {
        let d = tmpdir();
        let path = d.join("trunc.hsc");
        let cube = HyperCube::zeros(8, 8, 2);
        write_hsc(&path, &cube).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 10]).unwrap();
        match read_hsc(&path) {
            Err(DataError::PayloadSize { expected, actual }) => {
                assert_eq!(expected, 8 * 8 * 2 * 4);
                assert_eq!(actual, 8 * 8 * 2 * 4 - 10);
            }
            other => panic!("expected PayloadSize, got {other:?}"),
        }
        fs::remove_dir_all(d).ok();
    }
}
