//! Spectral branch: wavelet frequency split, coordinate mixing over the
//! pooled channel descriptors, and weighted low/high recombination.
//!
//! The three detail bands are averaged into one high-frequency tensor so
//! both branches share a shape. Full resolution is restored by the inverse
//! wavelet with the mixed map as the low band and zeroed detail bands.

use cofusion_tensor::{Graph, HaarBands, Tensor};

use crate::blocks::dw_gelu;
use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::params::ModelParams;
use crate::scm::{scm_expand, scm_topk_select, scm_traverse, SCM_TAU};

pub fn specam_forward(
    g: &Graph,
    p: &ModelParams,
    config: &ModelConfig,
    level: usize,
    x: &Tensor,
) -> Result<Tensor> {
    let (d, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(ModelError::Shape(format!(
            "spectral branch needs even spatial dims, got {h}x{w}"
        )));
    }
    let prefix = format!("level{level}.specam");

    // stage 1: frequency decomposition and channel saliency
    let bands = g.haar_dwt2(x)?;
    let detail_sum = g.add(&g.add(&bands.lh, &bands.hl)?, &bands.hh)?;
    let high_raw = g.scale(&detail_sum, 1.0 / 3.0)?;
    let f_low = dw_gelu(g, p, &format!("{prefix}.low"), &bands.ll, 1)?;
    let f_high = dw_gelu(g, p, &format!("{prefix}.high"), &high_raw, 1)?;
    let v_low = g.reshape(&g.global_maxpool(&f_low)?, vec![d])?;
    let v_high = g.reshape(&g.global_maxpool(&f_high)?, vec![d])?;

    // stage 2: spectral coordinate mixing
    let z_in = g.linear(
        &g.concat(&[&v_low, &v_high], 0)?,
        p.get(&format!("{prefix}.gtheta.weight"))?,
        p.get(&format!("{prefix}.gtheta.bias"))?,
    )?;
    let full = scm_expand(
        g,
        p.get(&format!("{prefix}.expand.w1"))?,
        p.get(&format!("{prefix}.expand.w2"))?,
        p.get(&format!("{prefix}.expand.w3"))?,
        &z_in,
        SCM_TAU,
    )?;
    let selected = scm_topk_select(g, &full, config.scm_topk)?;
    let z = scm_traverse(g, &selected, p.get(&format!("{prefix}.z0"))?)?;
    let attn = g.sigmoid(&g.linear(
        &z,
        p.get(&format!("{prefix}.map.weight"))?,
        p.get(&format!("{prefix}.map.bias"))?,
    )?)?;

    // stage 3: weighted fusion and residual restoration
    let alpha = g.sigmoid(p.get(&format!("{prefix}.alpha"))?)?;
    let one_minus_alpha = g.add_scalar(&g.scale(&alpha, -1.0)?, 1.0)?;
    let low_w = g.mul_scalar(&g.mul_channels(&f_low, &attn)?, &alpha)?;
    let high_w = g.mul_scalar(&g.mul_channels(&f_high, &attn)?, &one_minus_alpha)?;
    let mid = dw_gelu(g, p, &format!("{prefix}.mid"), &g.add(&low_w, &high_w)?, 1)?;

    let zero_band = || Tensor::zeros(vec![d, h / 2, w / 2]);
    let restored = g.haar_idwt2(&HaarBands {
        ll: mid,
        lh: zero_band(),
        hl: zero_band(),
        hh: zero_band(),
    })?;
    Ok(g.add(&restored, x)?)
}
