//! Training objective (L1 + SSIM) and the AdamW optimizer with the
//! training loop driver.

mod error;
mod loss;
mod optim;
mod train;

pub use error::{ObjectiveError, Result};
pub use loss::{
    effective_window, gaussian_window, l1_loss, ssim_band, ssim_loss, total_loss, LossBreakdown,
    SSIM_C1, SSIM_C2, SSIM_SIGMA, SSIM_WINDOW,
};
pub use optim::{
    adamw_step, OptimizerState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS, DEFAULT_WEIGHT_DECAY,
};
pub use train::{
    train_existing, train_loop, LrSchedule, Sample, StepRecord, TrainSchedule, DEFAULT_LAMBDA,
    DEFAULT_LR, DEFAULT_LR_END,
};
