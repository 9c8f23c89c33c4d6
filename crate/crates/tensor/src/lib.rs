//! Dense f64 tensors with taped reverse-mode automatic differentiation.
//!
//! Ops are methods on [`Graph`]; a graph is created per forward pass
//! (training or inference), records the backward rules of every primitive
//! it executes, and replays them in reverse on [`Graph::backward`]. All
//! kernels are deterministic scalar loops: a fixed input always produces
//! bitwise-identical output.

mod check;
mod error;
mod graph;
mod ops;
mod pad;
mod rng;
mod tensor;

pub use check::{max_rel_err, max_rel_err_sampled, BuildFn};
pub use error::{Result, TensorError};
pub use graph::{Graph, Mode};
pub use ops::activate::{erf, gelu_scalar, norm_cdf, sigmoid_scalar, Activation};
pub use ops::select::{rank_descending, TopK};
pub use ops::wavelet::HaarBands;
pub use pad::reflect_pad_hw;
pub use rng::{fnv1a64, Rng};
pub use tensor::Tensor;
