use std::cell::RefCell;

use crate::error::{arg_err, Result};
use crate::tensor::Tensor;

/// Whether a graph records operations for differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Training,
    Inference,
}

struct Node {
    outputs: Vec<Tensor>,
    backprop: Box<dyn Fn()>,
}

/// A per-forward-pass tape of primitive operations.
///
/// Ops are methods on `Graph`; each one computes its output eagerly and, in
/// training mode, records a closure that propagates the output's gradient
/// into its inputs. The tape is in execution order, which is a topological
/// order, so `backward` replays it reversed. Gradients accumulate additively
/// when a tensor feeds several consumers. Dropping the graph frees the tape.
pub struct Graph {
    mode: Mode,
    tape: RefCell<Vec<Node>>,
}

impl Graph {
    pub fn training() -> Self {
        Graph {
            mode: Mode::Training,
            tape: RefCell::new(Vec::new()),
        }
    }

    /// In inference mode no nodes are recorded; ops only compute values.
    pub fn inference() -> Self {
        Graph {
            mode: Mode::Inference,
            tape: RefCell::new(Vec::new()),
        }
    }

    pub fn with_mode(mode: Mode) -> Self {
        match mode {
            Mode::Training => Self::training(),
            Mode::Inference => Self::inference(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_training(&self) -> bool {
        self.mode == Mode::Training
    }

    pub fn node_count(&self) -> usize {
        self.tape.borrow().len()
    }

    /// Record a backward rule for an op with the given output tensors.
    /// Extension point: composite modules can define their own primitives by
    /// constructing outputs with [`Tensor::interior`] and registering a
    /// closure that reads the outputs' gradients (`grad_ref`) and
    /// accumulates into the inputs.
    pub fn record(&self, outputs: Vec<Tensor>, backprop: impl Fn() + 'static) {
        if self.is_training() {
            self.tape.borrow_mut().push(Node {
                outputs,
                backprop: Box::new(backprop),
            });
        }
    }

    /// Seed `d loss / d loss = 1` and replay the tape in reverse
    /// topological order. Interior gradients are reset at the start of each
    /// pass, so calling twice accumulates a second full gradient on the
    /// leaves.
    pub fn backward(&self, loss: &Tensor) -> Result<()> {
        if loss.len() != 1 {
            return arg_err(
                "backward",
                format!("loss must be scalar, got shape {:?}", loss.shape()),
            );
        }
        let tape = self.tape.borrow();
        for node in tape.iter() {
            for out in &node.outputs {
                out.clear_grad();
            }
        }
        loss.accumulate_grad(&[1.0]);
        for node in tape.iter().rev() {
            (node.backprop)();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inference_records_nothing() {
        let g = Graph::inference();
        let x = Tensor::param(vec![2], vec![1.0, 2.0]).unwrap();
        let y = g.add(&x, &x).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(y.to_vec(), vec![2.0, 4.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let g = Graph::training();
        let x = Tensor::param(vec![2], vec![1.0, 2.0]).unwrap();
        let y = g.add(&x, &x).unwrap();
        assert!(g.backward(&y).is_err());
    }

    #[test]
    fn sum_gradient_is_ones() {
        let g = Graph::training();
        let x = Tensor::param(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = g.sum_all(&x).unwrap();
        g.backward(&s).unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn square_sum_gradient() {
        // loss = sum(x*x) at x=[1,2] -> grad [2,4]
        let g = Graph::training();
        let x = Tensor::param(vec![2], vec![1.0, 2.0]).unwrap();
        let y = g.mul(&x, &x).unwrap();
        let s = g.sum_all(&y).unwrap();
        g.backward(&s).unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let g = Graph::training();
        let x = Tensor::param(vec![2], vec![1.0, 2.0]).unwrap();
        let s = g.sum_all(&x).unwrap();
        g.backward(&s).unwrap();
        g.backward(&s).unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn fan_out_accumulates_per_consumer() {
        // y = x + x uses x twice; dy/dx = 2
        let g = Graph::training();
        let x = Tensor::param(vec![1], vec![3.0]).unwrap();
        let y = g.add(&x, &x).unwrap();
        let s = g.sum_all(&y).unwrap();
        g.backward(&s).unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0]);
    }
}
