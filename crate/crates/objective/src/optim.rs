//! AdamW: Adam with bias-corrected moments and decoupled weight decay.
//!
//! Update per parameter theta with gradient grad:
//!   m <- b1 m + (1-b1) grad;  v <- b2 v + (1-b2) grad^2
//!   theta <- theta (1 - lr wd)
//!   theta <- theta - lr (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
//! Gradients are cleared by the step.

use std::collections::BTreeMap;

use cofusion_model::ModelParams;

use crate::error::{ObjectiveError, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub step_count: u64,
    first_moment: BTreeMap<String, Vec<f64>>,
    second_moment: BTreeMap<String, Vec<f64>>,
}

impl OptimizerState {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        OptimizerState {
            lr,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps: DEFAULT_EPS,
            weight_decay,
            step_count: 0,
            first_moment: BTreeMap::new(),
            second_moment: BTreeMap::new(),
        }
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }
}

/// One decoupled-weight-decay Adam step over every parameter. Every
/// parameter must carry a gradient.
pub fn adamw_step(params: &ModelParams, state: &mut OptimizerState) -> Result<()> {
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let decay = 1.0 - state.lr * state.weight_decay;

    for (path, tensor) in params.iter() {
        let grad = tensor.take_grad().ok_or_else(|| {
            ObjectiveError::State(format!("parameter '{path}' has no gradient"))
        })?;
        if grad.len() != tensor.len() {
            return Err(ObjectiveError::State(format!(
                "gradient of '{path}' has {} values for {} parameters",
                grad.len(),
                tensor.len()
            )));
        }
        let m = state
            .first_moment
            .entry(path.clone())
            .or_insert_with(|| vec![0.0; grad.len()]);
        let v = state
            .second_moment
            .entry(path.clone())
            .or_insert_with(|| vec![0.0; grad.len()]);
        let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps);
        tensor.update_data(|theta| {
            for i in 0..theta.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                theta[i] *= decay;
                theta[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
            }
        });
    }
    Ok(())
}
