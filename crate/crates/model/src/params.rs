//! The named learnable parameter set.
//!
//! Every parameter lives under a dotted path ("msg.level2.enc_local.dw.kernel").
//! The set is derived from the config alone, so it is exhaustively
//! enumerable for the optimizer and for serialization, and two models with
//! the same config always agree on paths and shapes.

use std::collections::BTreeMap;

use cofusion_tensor::{fnv1a64, Rng, Tensor};

use crate::config::{Ablation, ModelConfig};
use crate::error::{ModelError, Result};

/// How a parameter is filled at initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)).
    FanIn(usize),
    Zeros,
    Ones,
}

/// Path, shape, and init rule of one parameter.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub path: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

fn spec(path: String, shape: Vec<usize>, init: Init) -> ParamSpec {
    ParamSpec { path, shape, init }
}

/// Depthwise-separable block: depthwise k x k kernel plus pointwise
/// projection with bias.
fn dw_block_specs(out: &mut Vec<ParamSpec>, prefix: &str, channels: usize, k: usize) {
    out.push(spec(
        format!("{prefix}.dw.kernel"),
        vec![channels, k, k],
        Init::FanIn(k * k),
    ));
    out.push(spec(
        format!("{prefix}.pw.kernel"),
        vec![channels, channels],
        Init::FanIn(channels),
    ));
    out.push(spec(
        format!("{prefix}.pw.bias"),
        vec![channels],
        Init::Zeros,
    ));
}

/// Full parameter listing for a config, sorted by path.
pub fn parameter_specs(config: &ModelConfig) -> Vec<ParamSpec> {
    let d = config.hidden_dim;
    let cin = config.hsi_bands + config.msi_bands;
    let levels = config.levels;
    let mut out = Vec::new();

    // multi-scale generator
    out.push(spec(
        "msg.stem.kernel".into(),
        vec![d, cin, 3, 3],
        Init::FanIn(cin * 9),
    ));
    out.push(spec("msg.stem.bias".into(), vec![d], Init::Zeros));
    for l in 2..=levels {
        dw_block_specs(&mut out, &format!("msg.level{l}.enc_local"), d, 3);
    }
    for l in 1..=levels {
        dw_block_specs(&mut out, &format!("msg.level{l}.enc_global"), d, 3);
    }

    for l in 1..=levels {
        // spatial branch
        if config.disabled(Ablation::DisableSpacam) {
            dw_block_specs(&mut out, &format!("level{l}.spacam_res"), d, 3);
        } else {
            for j in 0..config.dilations.len() {
                dw_block_specs(&mut out, &format!("level{l}.spacam.gate{j}"), d, 3);
                dw_block_specs(&mut out, &format!("level{l}.spacam.value{j}"), d, 3);
            }
            out.push(spec(
                format!("level{l}.spacam.fuse.kernel"),
                vec![d, d],
                Init::FanIn(d),
            ));
            out.push(spec(format!("level{l}.spacam.fuse.bias"), vec![d], Init::Zeros));
        }

        // spectral branch
        if config.disabled(Ablation::DisableSpespectral) {
            dw_block_specs(&mut out, &format!("level{l}.specam_res"), d, 3);
        } else {
            dw_block_specs(&mut out, &format!("level{l}.specam.low"), d, 3);
            dw_block_specs(&mut out, &format!("level{l}.specam.high"), d, 3);
            out.push(spec(
                format!("level{l}.specam.gtheta.weight"),
                vec![d, 2 * d],
                Init::FanIn(2 * d),
            ));
            out.push(spec(
                format!("level{l}.specam.gtheta.bias"),
                vec![d],
                Init::Zeros,
            ));
            for w in ["w1", "w2", "w3"] {
                out.push(spec(
                    format!("level{l}.specam.expand.{w}"),
                    vec![d, d],
                    Init::FanIn(d),
                ));
            }
            out.push(spec(
                format!("level{l}.specam.map.weight"),
                vec![d, d],
                Init::FanIn(d),
            ));
            out.push(spec(format!("level{l}.specam.map.bias"), vec![d], Init::Zeros));
            // raw mixing weight; sigmoid(0) = 0.5 at init
            out.push(spec(format!("level{l}.specam.alpha"), vec![1], Init::Zeros));
            out.push(spec(format!("level{l}.specam.z0"), vec![d], Init::Zeros));
            dw_block_specs(&mut out, &format!("level{l}.specam.mid"), d, 3);
        }

        // cross fusion
        if config.disabled(Ablation::DisableSscfm) {
            dw_block_specs(&mut out, &format!("level{l}.sscfm_res"), d, 3);
        } else {
            for stream in ["spa", "spe"] {
                out.push(spec(
                    format!("level{l}.sscfm.norm_{stream}.gamma"),
                    vec![d],
                    Init::Ones,
                ));
                out.push(spec(
                    format!("level{l}.sscfm.norm_{stream}.beta"),
                    vec![d],
                    Init::Zeros,
                ));
                for &k in &config.lka_kernels {
                    dw_block_specs(&mut out, &format!("level{l}.sscfm.lka_{stream}.k{k}"), d, k);
                }
                let hidden = d / 4;
                out.push(spec(
                    format!("level{l}.sscfm.sse_{stream}.fc1.weight"),
                    vec![hidden, d],
                    Init::FanIn(d),
                ));
                out.push(spec(
                    format!("level{l}.sscfm.sse_{stream}.fc1.bias"),
                    vec![hidden],
                    Init::Zeros,
                ));
                out.push(spec(
                    format!("level{l}.sscfm.sse_{stream}.fc2.weight"),
                    vec![d, hidden],
                    Init::FanIn(hidden),
                ));
                out.push(spec(
                    format!("level{l}.sscfm.sse_{stream}.fc2.bias"),
                    vec![d],
                    Init::Zeros,
                ));
            }
            out.push(spec(
                format!("level{l}.sscfm.fuse.kernel"),
                vec![d, 2 * d, 3, 3],
                Init::FanIn(2 * d * 9),
            ));
            out.push(spec(format!("level{l}.sscfm.fuse.bias"), vec![d], Init::Zeros));
        }
    }

    // reconstruction head
    for l in 1..levels {
        out.push(spec(
            format!("recon.up{l}.kernel"),
            vec![d, d, 3, 3],
            Init::FanIn(d * 9),
        ));
        out.push(spec(format!("recon.up{l}.bias"), vec![d], Init::Zeros));
    }
    out.push(spec(
        "recon.head.kernel".into(),
        vec![config.hsi_bands, d, 3, 3],
        Init::FanIn(d * 9),
    ));
    out.push(spec(
        "recon.head.bias".into(),
        vec![config.hsi_bands],
        Init::Zeros,
    ));

    out.sort_by(|a, b| a.path.cmp(&b.path));
    out
}

/// Named map from parameter path to tensor. Every tensor requires grad.
#[derive(Debug, Clone)]
pub struct ModelParams {
    map: BTreeMap<String, Tensor>,
}

impl ModelParams {
    /// Fan-in-scaled uniform init, seeded per path so the values of one
    /// parameter do not depend on which other parameters exist.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut map = BTreeMap::new();
        for s in parameter_specs(config) {
            let n: usize = s.shape.iter().product();
            let data = match s.init {
                Init::Zeros => vec![0.0; n],
                Init::Ones => vec![1.0; n],
                Init::FanIn(fan_in) => {
                    let bound = 1.0 / (fan_in as f64).sqrt();
                    let mut rng = Rng::seed(Rng::derive(seed, fnv1a64(s.path.as_bytes())));
                    (0..n).map(|_| rng.range(-bound, bound)).collect()
                }
            };
            map.insert(s.path, Tensor::param(s.shape, data)?);
        }
        Ok(ModelParams { map })
    }

    /// Every parameter exactly zero; reduces the network to its residual
    /// connections.
    pub fn init_zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut map = BTreeMap::new();
        for s in parameter_specs(config) {
            map.insert(s.path, Tensor::param_zeros(s.shape));
        }
        Ok(ModelParams { map })
    }

    pub fn get(&self, path: &str) -> Result<&Tensor> {
        self.map
            .get(path)
            .ok_or_else(|| ModelError::MissingParam(path.to_string()))
    }

    /// Parameters in sorted path order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Total number of learnable scalars.
    pub fn num_scalars(&self) -> usize {
        self.map.values().map(|t| t.len()).sum()
    }

    /// Insert or replace one parameter tensor. Exposed for test harnesses
    /// that substitute hand-built weights; normal construction goes through
    /// [`ModelParams::init`].
    pub fn insert(&mut self, path: String, t: Tensor) {
        self.map.insert(path, t);
    }

    pub fn empty() -> Self {
        ModelParams {
            map: BTreeMap::new(),
        }
    }

    pub fn clear_grads(&self) {
        for t in self.map.values() {
            t.clear_grad();
        }
    }

    /// Materialize a zero gradient for any parameter the backward pass did
    /// not reach (e.g. expansion weights whose entries were all clamped),
    /// so the optimizer sees a fully populated gradient set.
    pub fn ensure_grads(&self) {
        for t in self.map.values() {
            t.accumulate_grad_with(|_| {});
        }
    }
}
