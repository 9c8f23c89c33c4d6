//! Full-reference (PSNR, SSIM, SAM, ERGAS) and no-reference
//! (D_lambda, D_s, QNR) evaluation of fused hyperspectral images.

mod error;
mod full_ref;
mod noref;
mod report;

pub use error::{MetricError, Result};
pub use full_ref::{ergas, psnr, sam, ssim_metric};
pub use noref::{d_lambda, d_s, q_index, qnr, Q_BLOCK};
pub use report::{MetricsReport, ReportMode};
