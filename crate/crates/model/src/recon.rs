//! Reconstruction head: coarse-to-fine residual aggregation of the fused
//! pyramid, a 3x3 projection to the output bands, and the upsampled
//! spectral input as a global residual.

use cofusion_tensor::{Graph, Tensor};

use crate::config::ModelConfig;
use crate::error::{ModelError, Result};
use crate::params::ModelParams;

/// Aggregate fused features and project to the output band count, without
/// the spectral residual. `fused[0]` is the finest level.
pub(crate) fn recon_features(
    g: &Graph,
    p: &ModelParams,
    config: &ModelConfig,
    fused: &[Tensor],
) -> Result<Tensor> {
    if fused.len() != config.levels {
        return Err(ModelError::Shape(format!(
            "expected {} fused levels, got {}",
            config.levels,
            fused.len()
        )));
    }
    let mut r = fused[config.levels - 1].clone();
    for l in (1..config.levels).rev() {
        let up = g.up2(&r)?;
        let conv = g.conv2d(
            &up,
            p.get(&format!("recon.up{l}.kernel"))?,
            p.get(&format!("recon.up{l}.bias"))?,
            1,
            1,
            1,
        )?;
        r = g.add(&fused[l - 1], &conv)?;
    }
    Ok(g.conv2d(
        &r,
        p.get("recon.head.kernel")?,
        p.get("recon.head.bias")?,
        1,
        1,
        1,
    )?)
}

/// Full reconstruction: aggregated features plus the bilinearly upsampled
/// spectral input.
pub fn reconstruct(
    g: &Graph,
    p: &ModelParams,
    config: &ModelConfig,
    fused: &[Tensor],
    lrhsi: &Tensor,
) -> Result<Tensor> {
    let head = recon_features(g, p, config, fused)?;
    let (hh, ww) = (head.shape()[1], head.shape()[2]);
    let residual = g.bilinear_resize(lrhsi, hh, ww)?;
    Ok(g.add(&head, &residual)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cofusion_tensor::Rng;

    fn config() -> ModelConfig {
        let mut c = ModelConfig::for_data(8, 3, 4);
        c.hidden_dim = 8;
        c.scm_topk = 3;
        c
    }

    #[test]
    fn zero_features_and_weights_give_upsampled_input() {
        let c = config();
        let p = ModelParams::init_zeros(&c).unwrap();
        let g = Graph::inference();
        let fused = vec![
            Tensor::zeros(vec![8, 32, 32]),
            Tensor::zeros(vec![8, 16, 16]),
            Tensor::zeros(vec![8, 8, 8]),
        ];
        let mut rng = Rng::seed(21);
        let lr = Tensor::constant(vec![8, 8, 8], (0..512).map(|_| rng.uniform()).collect())
            .unwrap();
        let y = reconstruct(&g, &p, &c, &fused, &lr).unwrap();
        let want = g.bilinear_resize(&lr, 32, 32).unwrap();
        assert_eq!(y.to_vec(), want.to_vec());
    }

    #[test]
    fn output_shape_follows_band_count_and_scale() {
        let c = config();
        let p = ModelParams::init(&c, 3).unwrap();
        let g = Graph::inference();
        let fused = vec![
            Tensor::zeros(vec![8, 32, 32]),
            Tensor::zeros(vec![8, 16, 16]),
            Tensor::zeros(vec![8, 8, 8]),
        ];
        let lr = Tensor::zeros(vec![8, 8, 8]);
        let y = reconstruct(&g, &p, &c, &fused, &lr).unwrap();
        assert_eq!(y.shape(), &[8, 32, 32]);
    }
}
