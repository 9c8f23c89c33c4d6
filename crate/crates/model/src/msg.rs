//! Multi-scale generator: a pyramid of local features (downsampled, encoded
//! top-down) and global-proxy features (seeded at the coarsest level,
//! upsampled bottom-up).

use cofusion_tensor::{Graph, Tensor};

use crate::blocks::dw_gelu;
use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::params::ModelParams;

/// Per-level feature pairs. Index 0 is the finest level; spatial extent
/// halves exactly per level.
pub struct PyramidFeatures {
    pub local: Vec<Tensor>,
    pub global_proxy: Vec<Tensor>,
}

pub fn msg_build_pyramid(
    g: &Graph,
    p: &ModelParams,
    config: &ModelConfig,
    lrhsi: &Tensor,
    hrmsi: &Tensor,
) -> Result<PyramidFeatures> {
    if lrhsi.ndim() != 3 || hrmsi.ndim() != 3 {
        return Err(ModelError::Shape(format!(
            "expected [C,h,w] and [c,H,W], got {:?} and {:?}",
            lrhsi.shape(),
            hrmsi.shape()
        )));
    }
    let s = config.scale_factor;
    let (h, w) = (lrhsi.shape()[1], lrhsi.shape()[2]);
    let (hh, ww) = (hrmsi.shape()[1], hrmsi.shape()[2]);
    if hh != s * h || ww != s * w {
        return Err(ModelError::Shape(format!(
            "spatial ratio mismatch: lrhsi {h}x{w} * scale {s} != hrmsi {hh}x{ww}"
        )));
    }
    let halvings = 1usize << (config.levels - 1);
    if hh % halvings != 0 || ww % halvings != 0 {
        return Err(ModelError::Shape(format!(
            "hrmsi extent {hh}x{ww} must be divisible by {halvings} for {} levels",
            config.levels
        )));
    }

    // level-1 stem: upsampled spectra concatenated with the spatial bands
    let up = g.bilinear_resize(lrhsi, hh, ww)?;
    let cat = g.concat(&[&up, hrmsi], 0)?;
    let stem_k = p.get("msg.stem.kernel")?;
    let stem_b = p.get("msg.stem.bias")?;
    let f1 = g.conv2d(&cat, stem_k, stem_b, 1, 1, 1)?;

    let mut local = vec![f1];
    for l in 2..=config.levels {
        let down = g.down2(local.last().unwrap())?;
        local.push(dw_gelu(g, p, &format!("msg.level{l}.enc_local"), &down, 1)?);
    }

    let coarsest = config.levels;
    let mut global_rev = vec![dw_gelu(
        g,
        p,
        &format!("msg.level{coarsest}.enc_global"),
        local.last().unwrap(),
        1,
    )?];
    for l in (1..config.levels).rev() {
        let up = g.up2(global_rev.last().unwrap())?;
        global_rev.push(dw_gelu(g, p, &format!("msg.level{l}.enc_global"), &up, 1)?);
    }
    global_rev.reverse();

    Ok(PyramidFeatures {
        local,
        global_proxy: global_rev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;

    fn small_config() -> ModelConfig {
        let mut c = ModelConfig::for_data(8, 3, 4);
        c.hidden_dim = 8;
        c.scm_topk = 3;
        c
    }

    #[test]
    fn level_dims_halve_on_both_streams() {
        let c = small_config();
        let p = ModelParams::init(&c, 1).unwrap();
        let g = Graph::inference();
        let lr = Tensor::zeros(vec![8, 8, 8]);
        let ms = Tensor::zeros(vec![3, 32, 32]);
        let pyr = msg_build_pyramid(&g, &p, &c, &lr, &ms).unwrap();
        let dims: Vec<usize> = pyr.local.iter().map(|t| t.shape()[1]).collect();
        assert_eq!(dims, vec![32, 16, 8]);
        for (a, b) in pyr.local.iter().zip(&pyr.global_proxy) {
            assert_eq!(a.shape(), b.shape());
            assert_eq!(a.shape()[0], 8);
        }
    }

    #[test]
    fn zero_params_give_zero_features() {
        let c = small_config();
        let p = ModelParams::init_zeros(&c).unwrap();
        let g = Graph::inference();
        let lr = Tensor::full(vec![8, 8, 8], 0.7);
        let ms = Tensor::full(vec![3, 32, 32], 0.4);
        let pyr = msg_build_pyramid(&g, &p, &c, &lr, &ms).unwrap();
        for t in pyr.local.iter().chain(&pyr.global_proxy) {
            assert!(t.to_vec().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn ratio_mismatch_is_dimension_error() {
        let c = small_config();
        let p = ModelParams::init_zeros(&c).unwrap();
        let g = Graph::inference();
        let lr = Tensor::zeros(vec![8, 8, 8]);
        let ms = Tensor::zeros(vec![3, 24, 32]);
        assert!(msg_build_pyramid(&g, &p, &c, &lr, &ms).is_err());
    }
}
