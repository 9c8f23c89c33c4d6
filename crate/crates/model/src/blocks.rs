//! Shared building blocks: depthwise-separable convolutions and the plain
//! residual block used when a module is ablated.

use cofusion_tensor::{Graph, Tensor};

use crate::error::Result;
use crate::params::ModelParams;

/// Depthwise k x k (dilated) followed by pointwise projection with bias.
pub fn dw_separable(
    g: &Graph,
    p: &ModelParams,
    prefix: &str,
    x: &Tensor,
    dilation: usize,
) -> Result<Tensor> {
    let dw = p.get(&format!("{prefix}.dw.kernel"))?;
    let mid = g.conv2d_depthwise(x, dw, dilation, 1)?;
    let pw = p.get(&format!("{prefix}.pw.kernel"))?;
    let pb = p.get(&format!("{prefix}.pw.bias"))?;
    Ok(g.conv2d_pointwise(&mid, pw, pb)?)
}

/// dw-separable conv followed by GELU, the encoder unit of the pyramid.
pub fn dw_gelu(
    g: &Graph,
    p: &ModelParams,
    prefix: &str,
    x: &Tensor,
    dilation: usize,
) -> Result<Tensor> {
    let y = dw_separable(g, p, prefix, x, dilation)?;
    Ok(g.gelu(&y)?)
}

/// Standard residual block of matched channel width:
/// x + pointwise(gelu(depthwise(x))). Substituted for a disabled module.
pub fn residual_dw_block(g: &Graph, p: &ModelParams, prefix: &str, x: &Tensor) -> Result<Tensor> {
    let dw = p.get(&format!("{prefix}.dw.kernel"))?;
    let mid = g.gelu(&g.conv2d_depthwise(x, dw, 1, 1)?)?;
    let pw = p.get(&format!("{prefix}.pw.kernel"))?;
    let pb = p.get(&format!("{prefix}.pw.bias"))?;
    let y = g.conv2d_pointwise(&mid, pw, pb)?;
    Ok(g.add(x, &y)?)
}
