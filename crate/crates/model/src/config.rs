use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Modules that can be swapped for plain residual blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ablation {
    #[serde(rename = "disable_spacam")]
    DisableSpacam,
    #[serde(rename = "disable_spespectral")]
    DisableSpespectral,
    #[serde(rename = "disable_sscfm")]
    DisableSscfm,
}

impl std::str::FromStr for Ablation {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disable_spacam" => Ok(Ablation::DisableSpacam),
            "disable_spespectral" => Ok(Ablation::DisableSpespectral),
            "disable_sscfm" => Ok(Ablation::DisableSscfm),
            other => Err(ModelError::Config(format!("unknown ablation flag '{other}'"))),
        }
    }
}

/// Network hyperparameters. `hsi_bands`, `msi_bands`, and `scale_factor`
/// describe the data; everything else defaults to the reference
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Channel width D of every feature map.
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    /// K columns kept by the spectral coordinate ranking.
    #[serde(default = "default_topk")]
    pub scm_topk: usize,
    #[serde(default = "default_dilations")]
    pub dilations: Vec<usize>,
    /// Pyramid depth.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Kernel extents of the large-kernel attention masks.
    #[serde(default = "default_lka_kernels")]
    pub lka_kernels: Vec<usize>,
    /// Channel segments in the cross-fusion operator.
    #[serde(default = "default_split_groups")]
    pub split_groups: usize,
    #[serde(default = "default_dropout_rate")]
    pub dropout_rate: f64,
    #[serde(default)]
    pub ablation: BTreeSet<Ablation>,
    pub hsi_bands: usize,
    pub msi_bands: usize,
    pub scale_factor: usize,
}

fn default_hidden_dim() -> usize {
    64
}
fn default_topk() -> usize {
    8
}
fn default_dilations() -> Vec<usize> {
    vec![1, 2, 4]
}
fn default_levels() -> usize {
    3
}
fn default_lka_kernels() -> Vec<usize> {
    vec![3, 5]
}
fn default_split_groups() -> usize {
    4
}
fn default_dropout_rate() -> f64 {
    0.1
}

impl ModelConfig {
    /// Reference configuration for a given data geometry.
    pub fn for_data(hsi_bands: usize, msi_bands: usize, scale_factor: usize) -> Self {
        ModelConfig {
            hidden_dim: default_hidden_dim(),
            scm_topk: default_topk(),
            dilations: default_dilations(),
            levels: default_levels(),
            lka_kernels: default_lka_kernels(),
            split_groups: default_split_groups(),
            dropout_rate: default_dropout_rate(),
            ablation: BTreeSet::new(),
            hsi_bands,
            msi_bands,
            scale_factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.hidden_dim;
        if d == 0 || self.split_groups == 0 || !d.is_multiple_of(self.split_groups) {
            return Err(ModelError::Config(format!(
                "hidden_dim {d} must be a positive multiple of split_groups {}",
                self.split_groups
            )));
        }
        if !d.is_multiple_of(4) {
            return Err(ModelError::Config(format!(
                "hidden_dim {d} must be divisible by 4 (channel excitation bottleneck)"
            )));
        }
        if self.scm_topk == 0 || self.scm_topk > d {
            return Err(ModelError::Config(format!(
                "scm_topk {} must be in 1..={d}",
                self.scm_topk
            )));
        }
        if self.levels == 0 {
            return Err(ModelError::Config("levels must be >= 1".into()));
        }
        if self.dilations.is_empty() || self.dilations.contains(&0) {
            return Err(ModelError::Config(format!(
                "dilations {:?} must be non-empty positive",
                self.dilations
            )));
        }
        if self.lka_kernels.is_empty() || self.lka_kernels.iter().any(|&k| k % 2 == 0) {
            return Err(ModelError::Config(format!(
                "lka_kernels {:?} must be non-empty odd",
                self.lka_kernels
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ModelError::Config(format!(
                "dropout_rate {} must be in [0,1)",
                self.dropout_rate
            )));
        }
        if self.hsi_bands == 0 || self.msi_bands == 0 {
            return Err(ModelError::Config("band counts must be >= 1".into()));
        }
        if self.scale_factor == 0 {
            return Err(ModelError::Config("scale_factor must be >= 1".into()));
        }
        Ok(())
    }

    pub fn disabled(&self, a: Ablation) -> bool {
        self.ablation.contains(&a)
    }

    /// Canonical JSON used in the model container and the run manifest.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(text)
            .map_err(|e| ModelError::Config(format!("bad config json: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
