use std::fmt;

use cofusion_model::ModelError;
use cofusion_tensor::TensorError;

#[derive(Debug)]
pub enum ObjectiveError {
    Shape(String),
    /// Optimizer state inconsistency (missing gradient, unknown parameter).
    State(String),
    Data(String),
    /// Loss became NaN or infinite at the given step.
    NonFinite { step: usize },
    Tensor(TensorError),
    Model(ModelError),
}

impl fmt::Display for ObjectiveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Shape(s) => write!(f, "dimension error: {s}"),
            Self::State(s) => write!(f, "optimizer state error: {s}"),
            Self::Data(s) => write!(f, "data error: {s}"),
            Self::NonFinite { step } => write!(f, "non-finite loss at step {step}"),
            Self::Tensor(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ObjectiveError {}

impl From<TensorError> for ObjectiveError {
    fn from(e: TensorError) -> Self {
        ObjectiveError::Tensor(e)
    }
}

impl From<ModelError> for ObjectiveError {
    fn from(e: ModelError) -> Self {
        ObjectiveError::Model(e)
    }
}

pub type Result<T> = std::result::Result<T, ObjectiveError>;
