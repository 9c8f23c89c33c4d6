//! Cross fusion of the refined spatial and spectral streams.
//!
//! Each stream is layer-normalized and produces spatial attention masks
//! (softmax over positions of parallel dw-separable convs, one per
//! configured kernel) plus an excited channel vector from max-pooling
//! through a bottleneck MLP. The masks of one stream gate the
//! channel-excited features of the other, per channel segment; the first
//! half of the segments uses the small-kernel mask, the second half the
//! large one. Segments are concatenated, fused by a 3x3 conv, and added to
//! the mean of the two inputs.

use cofusion_tensor::{fnv1a64, Graph, Rng, Tensor};

use crate::blocks::dw_separable;
use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::params::ModelParams;

struct StreamFeatures {
    /// One [D, H, W] spatial mask per configured kernel size.
    masks: Vec<Tensor>,
    /// Excited channel vector, [D, 1, 1].
    excitation: Tensor,
}

fn stream_features(
    g: &Graph,
    p: &ModelParams,
    config: &ModelConfig,
    level: usize,
    name: &str,
    x: &Tensor,
) -> Result<StreamFeatures> {
    let d = x.shape()[0];
    let normed = g.layernorm(
        x,
        p.get(&format!("level{level}.sscfm.norm_{name}.gamma"))?,
        p.get(&format!("level{level}.sscfm.norm_{name}.beta"))?,
        1e-5,
    )?;
    let mut masks = Vec::new();
    for &k in &config.lka_kernels {
        let conv = dw_separable(
            g,
            p,
            &format!("level{level}.sscfm.lka_{name}.k{k}"),
            &normed,
            1,
        )?;
        masks.push(g.softmax_spatial(&conv)?);
    }
    let pooled = g.reshape(&g.global_maxpool(x)?, vec![d])?;
    let h1 = g.relu(&g.linear(
        &pooled,
        p.get(&format!("level{level}.sscfm.sse_{name}.fc1.weight"))?,
        p.get(&format!("level{level}.sscfm.sse_{name}.fc1.bias"))?,
    )?)?;
    let h2 = g.relu(&g.linear(
        &h1,
        p.get(&format!("level{level}.sscfm.sse_{name}.fc2.weight"))?,
        p.get(&format!("level{level}.sscfm.sse_{name}.fc2.bias"))?,
    )?)?;
    Ok(StreamFeatures {
        masks,
        excitation: g.reshape(&h2, vec![d, 1, 1])?,
    })
}

pub fn sscfm_forward(
    g: &Graph,
    p: &ModelParams,
    config: &ModelConfig,
    level: usize,
    f_spa: &Tensor,
    f_spe: &Tensor,
    dropout_seed: u64,
) -> Result<Tensor> {
    if f_spa.shape() != f_spe.shape() {
        return Err(ModelError::Shape(format!(
            "stream shapes differ: {:?} vs {:?}",
            f_spa.shape(),
            f_spe.shape()
        )));
    }
    let d = f_spa.shape()[0];
    let groups = config.split_groups;
    if !d.is_multiple_of(groups) {
        return Err(ModelError::Config(format!(
            "channel width {d} not divisible into {groups} segments"
        )));
    }
    let seg = d / groups;

    let spa = stream_features(g, p, config, level, "spa", f_spa)?;
    let spe = stream_features(g, p, config, level, "spe", f_spe)?;

    // spe features gated by spa masks, then spa features gated by spe masks
    let mut segments = Vec::with_capacity(2 * groups);
    let routes = [("spe", f_spe, &spe.excitation, &spa.masks), ("spa", f_spa, &spa.excitation, &spe.masks)];
    for (dir, features, excitation, masks) in routes {
        for gi in 0..groups {
            let ki = gi * config.lka_kernels.len() / groups;
            let f_seg = g.narrow(features, 0, gi * seg, seg)?;
            let v_seg = g.narrow(excitation, 0, gi * seg, seg)?;
            let m_seg = g.narrow(&masks[ki], 0, gi * seg, seg)?;
            let site = fnv1a64(format!("level{level}.{dir}.{gi}").as_bytes());
            let gated_mask =
                g.dropout_mask(&m_seg, config.dropout_rate, Rng::derive(dropout_seed, site))?;
            let excited = g.mul_channels(&f_seg, &v_seg)?;
            segments.push(g.mul(&gated_mask, &excited)?);
        }
    }
    let refs: Vec<&Tensor> = segments.iter().collect();
    let cat = g.concat(&refs, 0)?;
    let fused = g.conv2d(
        &cat,
        p.get(&format!("level{level}.sscfm.fuse.kernel"))?,
        p.get(&format!("level{level}.sscfm.fuse.bias"))?,
        1,
        1,
        1,
    )?;
    let mean_in = g.scale(&g.add(f_spa, f_spe)?, 0.5)?;
    Ok(g.add(&fused, &mean_in)?)
}
