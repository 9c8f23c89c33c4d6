use cofusion_tensor::Tensor;

use crate::error::{DataError, Result};

/// An H x W x B image of nonnegative reflectance values, stored band-major
/// (band, row, col) so per-band operations stream contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub data: Vec<f64>,
    pub wavelengths_nm: Option<Vec<f64>>,
}

impl HyperCube {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * bands {
            return Err(DataError::Dimension(format!(
                "{height}x{width}x{bands} needs {} values, got {}",
                height * width * bands,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(DataError::Argument("cube contains non-finite values".into()));
        }
        Ok(HyperCube {
            height,
            width,
            bands,
            data,
            wavelengths_nm: None,
        })
    }

    pub fn zeros(height: usize, width: usize, bands: usize) -> Self {
        HyperCube {
            height,
            width,
            bands,
            data: vec![0.0; height * width * bands],
            wavelengths_nm: None,
        }
    }

    pub fn with_wavelengths(mut self, wl: Vec<f64>) -> Result<Self> {
        if wl.len() != self.bands {
            return Err(DataError::Dimension(format!(
                "{} wavelengths for {} bands",
                wl.len(),
                self.bands
            )));
        }
        if wl.windows(2).any(|p| p[0] >= p[1]) {
            return Err(DataError::Argument(
                "wavelengths must be strictly increasing".into(),
            ));
        }
        self.wavelengths_nm = Some(wl);
        Ok(self)
    }

    #[inline]
    pub fn at(&self, band: usize, row: usize, col: usize) -> f64 {
        self.data[(band * self.height + row) * self.width + col]
    }

    #[inline]
    pub fn at_mut(&mut self, band: usize, row: usize, col: usize) -> &mut f64 {
        &mut self.data[(band * self.height + row) * self.width + col]
    }

    pub fn band(&self, b: usize) -> &[f64] {
        let hw = self.height * self.width;
        &self.data[b * hw..(b + 1) * hw]
    }

    /// Pass every value through f32, matching on-disk precision. Cubes that
    /// have been quantized round-trip the HSC format bit-exactly.
    pub fn quantize_f32(mut self) -> Self {
        for v in self.data.iter_mut() {
            *v = *v as f32 as f64;
        }
        self
    }

    /// View as a constant [bands, height, width] tensor.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::constant(
            vec![self.bands, self.height, self.width],
            self.data.clone(),
        )
        .expect("cube dims consistent")
    }

    /// Build a cube from a [bands, height, width] tensor.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        if t.ndim() != 3 {
            return Err(DataError::Dimension(format!(
                "expected [bands,H,W] tensor, got {:?}",
                t.shape()
            )));
        }
        HyperCube::new(t.shape()[1], t.shape()[2], t.shape()[0], t.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_checked() {
        assert!(HyperCube::new(2, 2, 2, vec![0.0; 7]).is_err());
        assert!(HyperCube::new(2, 2, 2, vec![0.0; 8]).is_ok());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(HyperCube::new(1, 1, 2, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn wavelengths_must_increase() {
        let c = HyperCube::zeros(2, 2, 3);
        assert!(c.clone().with_wavelengths(vec![400.0, 500.0, 500.0]).is_err());
        assert!(c.clone().with_wavelengths(vec![400.0, 500.0]).is_err());
        assert!(c.with_wavelengths(vec![400.0, 500.0, 600.0]).is_ok());
    }

    #[test]
    fn tensor_round_trip() {
        let mut c = HyperCube::zeros(2, 3, 4);
        for (i, v) in c.data.iter_mut().enumerate() {
            *v = i as f64;
        }
        let t = c.to_tensor();
        assert_eq!(t.shape(), &[4, 2, 3]);
        let back = HyperCube::from_tensor(&t).unwrap();
        assert_eq!(back.data, c.data);
    }
}
