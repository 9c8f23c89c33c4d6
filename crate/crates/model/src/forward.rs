//! End-to-end forward pass: pad, build the pyramid, run the dual branches
//! and cross fusion per level, reconstruct, crop, and add the spectral
//! residual at the original resolution.

use cofusion_tensor::{reflect_pad_hw, Graph, Tensor};

use crate::blocks::residual_dw_block;
use crate::config::{Ablation, ModelConfig};
use crate::error::{ModelError, Result};
use crate::msg::msg_build_pyramid;
use crate::params::ModelParams;
use crate::recon::recon_features;
use crate::spacam::spacam_forward;
use crate::specam::specam_forward;
use crate::sscfm::sscfm_forward;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The spectral branch halves extents `levels` times in total (pyramid plus
/// its own wavelet split), so padded extents must be divisible by
/// 2^levels. Returns the padded low-res extent for one axis.
fn padded_extent(lo: usize, scale: usize, levels: usize) -> usize {
    let m = 1usize << levels;
    let t = m / gcd(m, scale);
    lo.div_ceil(t) * t
}

pub fn cofusion_forward(
    g: &Graph,
    p: &ModelParams,
    config: &ModelConfig,
    lrhsi: &Tensor,
    hrmsi: &Tensor,
    dropout_seed: u64,
) -> Result<Tensor> {
    config.validate()?;
    if lrhsi.ndim() != 3 || hrmsi.ndim() != 3 {
        return Err(ModelError::Shape(format!(
            "expected [C,h,w] and [c,H,W], got {:?} and {:?}",
            lrhsi.shape(),
            hrmsi.shape()
        )));
    }
    if lrhsi.shape()[0] != config.hsi_bands {
        return Err(ModelError::Shape(format!(
            "lrhsi has {} bands, config expects {}",
            lrhsi.shape()[0],
            config.hsi_bands
        )));
    }
    if hrmsi.shape()[0] != config.msi_bands {
        return Err(ModelError::Shape(format!(
            "hrmsi has {} bands, config expects {}",
            hrmsi.shape()[0],
            config.msi_bands
        )));
    }
    let s = config.scale_factor;
    let (h, w) = (lrhsi.shape()[1], lrhsi.shape()[2]);
    let (hh, ww) = (hrmsi.shape()[1], hrmsi.shape()[2]);
    if hh != s * h || ww != s * w {
        return Err(ModelError::Shape(format!(
            "hrmsi {hh}x{ww} is not scale {s} of lrhsi {h}x{w}"
        )));
    }
    let (out_h, out_w) = (hh, ww);

    let (ph, pw) = (padded_extent(h, s, config.levels), padded_extent(w, s, config.levels));
    let padded = ph != h || pw != w;
    let (lr_in, ms_in);
    if padded {
        lr_in = reflect_pad_hw(lrhsi, ph - h, pw - w)?;
        ms_in = reflect_pad_hw(hrmsi, s * (ph - h), s * (pw - w))?;
    } else {
        lr_in = lrhsi.clone();
        ms_in = hrmsi.clone();
    }

    let pyramid = msg_build_pyramid(g, p, config, &lr_in, &ms_in)?;
    let mut fused = Vec::with_capacity(config.levels);
    for l in 1..=config.levels {
        let local = &pyramid.local[l - 1];
        let proxy = &pyramid.global_proxy[l - 1];
        let spa = if config.disabled(Ablation::DisableSpacam) {
            residual_dw_block(g, p, &format!("level{l}.spacam_res"), local)?
        } else {
            spacam_forward(g, p, config, l, local)?
        };
        let spe = if config.disabled(Ablation::DisableSpespectral) {
            residual_dw_block(g, p, &format!("level{l}.specam_res"), proxy)?
        } else {
            specam_forward(g, p, config, l, proxy)?
        };
        let merged = if config.disabled(Ablation::DisableSscfm) {
            let mean = g.scale(&g.add(&spa, &spe)?, 0.5)?;
            residual_dw_block(g, p, &format!("level{l}.sscfm_res"), &mean)?
        } else {
            sscfm_forward(g, p, config, l, &spa, &spe, dropout_seed)?
        };
        fused.push(merged);
    }

    let mut head = recon_features(g, p, config, &fused)?;
    if padded {
        head = g.narrow(&head, 1, 0, out_h)?;
        head = g.narrow(&head, 2, 0, out_w)?;
    }
    // spectral residual from the unpadded input, so the padding convention
    // never disturbs the residual passthrough
    let residual = g.bilinear_resize(lrhsi, out_h, out_w)?;
    Ok(g.add(&head, &residual)?)
}
