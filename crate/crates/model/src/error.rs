use std::fmt;

use cofusion_tensor::TensorError;

#[derive(Debug)]
pub enum ModelError {
    Config(String),
    MissingParam(String),
    Shape(String),
    Tensor(TensorError),
    Io(std::io::Error),
    /// Malformed or inconsistent serialized model.
    Format(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(s) => write!(f, "config error: {s}"),
            Self::MissingParam(p) => write!(f, "missing parameter '{p}'"),
            Self::Shape(s) => write!(f, "dimension error: {s}"),
            Self::Tensor(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
            Self::Format(s) => write!(f, "model format error: {s}"),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<TensorError> for ModelError {
    fn from(e: TensorError) -> Self {
        ModelError::Tensor(e)
    }
}

impl From<std::io::Error> for ModelError {
    fn from(e: std::io::Error) -> Self {
        ModelError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
