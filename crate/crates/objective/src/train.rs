//! Training loop driver: deterministic given a seed, batch size 1,
//! constant or cosine learning-rate schedule.

use cofusion_model::{cofusion_forward, ModelConfig, ModelParams};
use cofusion_tensor::{Graph, Rng, Tensor};
use serde::Serialize;

use crate::error::{ObjectiveError, Result};
use crate::loss::total_loss;
use crate::optim::{adamw_step, OptimizerState, DEFAULT_WEIGHT_DECAY};

// Cosine schedule endpoints. The start value is calibrated so the frozen
// 300-step overfit regression converges below its fixed threshold.
pub const DEFAULT_LR: f64 = 5e-3;
pub const DEFAULT_LR_END: f64 = 1e-4;
pub const DEFAULT_LAMBDA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LrSchedule {
    Constant(f64),
    /// Half-cosine decay from `start` at step 0 to `end` at the last step.
    Cosine { start: f64, end: f64 },
}

impl LrSchedule {
    pub fn at(&self, step: usize, total_steps: usize) -> f64 {
        match *self {
            LrSchedule::Constant(lr) => lr,
            LrSchedule::Cosine { start, end } => {
                if total_steps <= 1 {
                    return start;
                }
                let t = step as f64 / (total_steps - 1) as f64;
                end + 0.5 * (start - end) * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainSchedule {
    pub steps: usize,
    pub lr: LrSchedule,
    pub weight_decay: f64,
    pub loss_lambda: f64,
}

impl TrainSchedule {
    pub fn for_steps(steps: usize) -> Self {
        TrainSchedule {
            steps,
            lr: LrSchedule::Cosine {
                start: DEFAULT_LR,
                end: DEFAULT_LR_END,
            },
            weight_decay: DEFAULT_WEIGHT_DECAY,
            loss_lambda: DEFAULT_LAMBDA,
        }
    }
}

/// One line of the loss log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub l1: f64,
    pub ssim_loss: f64,
    pub total: f64,
    pub lr: f64,
}

impl StepRecord {
    /// Newline-delimited JSON form: {"step":..,"l1":..,...}.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// A training sample: (lrhsi, hrmsi, ground truth), all [bands, H, W].
pub type Sample = (Tensor, Tensor, Tensor);

fn check_dataset(dataset: &[Sample]) -> Result<()> {
    let Some(first) = dataset.first() else {
        return Err(ObjectiveError::Data("empty dataset".into()));
    };
    for (i, s) in dataset.iter().enumerate() {
        if s.0.shape() != first.0.shape()
            || s.1.shape() != first.1.shape()
            || s.2.shape() != first.2.shape()
        {
            return Err(ObjectiveError::Data(format!(
                "sample {i} shapes differ from sample 0"
            )));
        }
    }
    Ok(())
}

/// Train from a fresh initialization. Deterministic per seed: same seed,
/// same dataset, same schedule give bit-identical parameters and logs.
pub fn train_loop(
    dataset: &[Sample],
    config: &ModelConfig,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<(ModelParams, Vec<StepRecord>)> {
    check_dataset(dataset)?;
    config.validate()?;
    let params = ModelParams::init(config, seed)?;
    let log = train_existing(&params, dataset, config, schedule, seed)?;
    Ok((params, log))
}

/// Continue training the given parameters in place; returns the loss log.
pub fn train_existing(
    params: &ModelParams,
    dataset: &[Sample],
    config: &ModelConfig,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<Vec<StepRecord>> {
    check_dataset(dataset)?;
    let mut state = OptimizerState::new(
        schedule.lr.at(0, schedule.steps),
        schedule.weight_decay,
    );
    let mut log = Vec::with_capacity(schedule.steps);
    for step in 0..schedule.steps {
        let lr = schedule.lr.at(step, schedule.steps);
        state.set_lr(lr);
        let (lrhsi, hrmsi, gt) = &dataset[step % dataset.len()];
        let graph = Graph::training();
        let dropout_seed = Rng::derive(seed, 0x5452_4149 ^ step as u64);
        let pred = cofusion_forward(&graph, params, config, lrhsi, hrmsi, dropout_seed)?;
        let (loss, breakdown) = total_loss(&graph, &pred, gt, schedule.loss_lambda)?;
        if !breakdown.total.is_finite() {
            return Err(ObjectiveError::NonFinite { step });
        }
        graph.backward(&loss)?;
        params.ensure_grads();
        adamw_step(params, &mut state)?;
        log.push(StepRecord {
            step,
            l1: breakdown.l1,
            ssim_loss: breakdown.ssim_loss,
            total: breakdown.total,
            lr,
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ModelConfig {
        let mut c = ModelConfig::for_data(4, 2, 2);
        c.hidden_dim = 8;
        c.scm_topk = 2;
        c
    }

    fn tiny_sample(seed: u64) -> Sample {
        let mut rng = Rng::seed(seed);
        let mk = |shape: Vec<usize>, rng: &mut Rng| {
            let n: usize = shape.iter().product();
            Tensor::constant(shape, (0..n).map(|_| rng.uniform()).collect()).unwrap()
        };
        let lr = mk(vec![4, 8, 8], &mut rng);
        let ms = mk(vec![2, 16, 16], &mut rng);
        let gt = mk(vec![4, 16, 16], &mut rng);
        (lr, ms, gt)
    }

    #[test]
    fn cosine_schedule_hits_both_endpoints() {
        let s = LrSchedule::Cosine {
            start: 1e-3,
            end: 1e-4,
        };
        assert!((s.at(0, 100) - 1e-3).abs() < 1e-18);
        assert!((s.at(99, 100) - 1e-4).abs() < 1e-18);
        assert!(s.at(50, 100) < 1e-3 && s.at(50, 100) > 1e-4);
        assert_eq!(s.at(0, 1), 1e-3);
    }

    #[test]
    fn zero_steps_leaves_params_at_init_with_empty_log() {
        let cfg = tiny_config();
        let (params, log) = train_loop(
            &[tiny_sample(1)],
            &cfg,
            &TrainSchedule::for_steps(0),
            42,
        )
        .unwrap();
        assert!(log.is_empty());
        let fresh = ModelParams::init(&cfg, 42).unwrap();
        for ((pa, ta), (pb, tb)) in params.iter().zip(fresh.iter()) {
            assert_eq!(pa, pb);
            assert_eq!(ta.to_vec(), tb.to_vec());
        }
    }

    #[test]
    fn same_seed_runs_are_bit_identical() {
        let cfg = tiny_config();
        let sched = TrainSchedule::for_steps(5);
        let (pa, la) = train_loop(&[tiny_sample(2)], &cfg, &sched, 7).unwrap();
        let (pb, lb) = train_loop(&[tiny_sample(2)], &cfg, &sched, 7).unwrap();
        assert_eq!(la, lb);
        for ((_, ta), (_, tb)) in pa.iter().zip(pb.iter()) {
            let (da, db) = (ta.to_vec(), tb.to_vec());
            for i in 0..da.len() {
                assert_eq!(da[i].to_bits(), db[i].to_bits());
            }
        }
    }

    #[test]
    fn short_overfit_run_reduces_loss() {
        let cfg = tiny_config();
        let mut sched = TrainSchedule::for_steps(40);
        sched.lr = LrSchedule::Constant(2e-3);
        let (_, log) = train_loop(&[tiny_sample(3)], &cfg, &sched, 11).unwrap();
        assert_eq!(log.len(), 40);
        assert!(log.iter().all(|r| r.total.is_finite()));
        assert!(
            log.last().unwrap().total < log[0].total,
            "loss did not decrease: {} -> {}",
            log[0].total,
            log.last().unwrap().total
        );
    }

    #[test]
    fn exploding_learning_rate_aborts_with_step_index() {
        let cfg = tiny_config();
        let mut sched = TrainSchedule::for_steps(10);
        sched.lr = LrSchedule::Constant(1e150);
        match train_loop(&[tiny_sample(4)], &cfg, &sched, 5) {
            Err(ObjectiveError::NonFinite { step }) => assert!(step > 0),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn empty_dataset_is_data_error() {
        let cfg = tiny_config();
        assert!(matches!(
            train_loop(&[], &cfg, &TrainSchedule::for_steps(1), 0),
            Err(ObjectiveError::Data(_))
        ));
    }

    #[test]
    fn log_line_is_json_with_stable_keys() {
        let r = StepRecord {
            step: 3,
            l1: 0.5,
            ssim_loss: 0.25,
            total: 0.525,
            lr: 1e-3,
        };
        let line = r.to_json_line();
        assert!(line.starts_with("{\"step\":3,\"l1\":0.5,"));
        assert!(line.contains("\"ssim_loss\":0.25"));
        assert!(line.contains("\"lr\":0.001"));
    }
}
