//! Spatial branch: dilated depthwise gates with softmax spatial attention.
//!
//! Per dilation d: a gate path pools the input (3x3 window, stride 1,
//! padding 1, so resolution is preserved), runs a dilated dw-separable
//! conv, and softmaxes over spatial positions per channel; the gated value
//! path is GELU of a dw-separable conv of the raw input. Each branch adds
//! the input back; branches are averaged and fused by a pointwise conv.

use cofusion_tensor::{Graph, Tensor};

use crate::blocks::dw_separable;
use crate::config::ModelConfig;
use crate::error::Result;
use crate::params::ModelParams;

pub fn spacam_forward(
    g: &Graph,
    p: &ModelParams,
    config: &ModelConfig,
    level: usize,
    x: &Tensor,
) -> Result<Tensor> {
    let pooled = g.maxpool2d(x, 3, 1, 1)?;
    let mut sum: Option<Tensor> = None;
    for (j, &d) in config.dilations.iter().enumerate() {
        let gate = dw_separable(g, p, &format!("level{level}.spacam.gate{j}"), &pooled, d)?;
        let mask = g.softmax_spatial(&gate)?;
        let value = dw_separable(g, p, &format!("level{level}.spacam.value{j}"), x, 1)?;
        let gated = g.mul(&mask, &g.gelu(&value)?)?;
        let branch = g.add(&gated, x)?;
        sum = Some(match sum {
            None => branch,
            Some(acc) => g.add(&acc, &branch)?,
        });
    }
    let avg = g.scale(&sum.expect("dilations non-empty"), 1.0 / config.dilations.len() as f64)?;
    let fuse_k = p.get(&format!("level{level}.spacam.fuse.kernel"))?;
    let fuse_b = p.get(&format!("level{level}.spacam.fuse.bias"))?;
    Ok(g.conv2d_pointwise(&avg, fuse_k, fuse_b)?)
}
