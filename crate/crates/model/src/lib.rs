//! The CoFusion network: a three-level feature pyramid with a spatial
//! attention branch, a wavelet/coordinate-mixing spectral branch, and a
//! cross-fusion module per level, composed into a single differentiable
//! forward pass over the tensor substrate.

mod blocks;
mod config;
mod error;
mod forward;
mod io;
mod msg;
mod params;
mod recon;
mod scm;
mod spacam;
mod specam;
mod sscfm;

pub use blocks::{dw_gelu, dw_separable, residual_dw_block};
pub use config::{Ablation, ModelConfig};
pub use error::{ModelError, Result};
pub use forward::cofusion_forward;
pub use io::{load_model, save_model};
pub use msg::{msg_build_pyramid, PyramidFeatures};
pub use params::{parameter_specs, Init, ModelParams, ParamSpec};
pub use recon::reconstruct;
pub use scm::{scm_expand, scm_topk_select, scm_traverse, traverse_oracle, SCM_TAU};
pub use spacam::spacam_forward;
pub use specam::specam_forward;
pub use sscfm::sscfm_forward;
