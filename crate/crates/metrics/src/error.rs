use std::fmt;

#[derive(Debug)]
pub enum MetricError {
    Shape(String),
    /// The metric is mathematically undefined for this input.
    Undefined(String),
    Argument(String),
    Data(cofusion_datasim::DataError),
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Shape(s) => write!(f, "dimension error: {s}"),
            Self::Undefined(s) => write!(f, "undefined metric: {s}"),
            Self::Argument(s) => write!(f, "invalid argument: {s}"),
            Self::Data(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for MetricError {}

impl From<cofusion_datasim::DataError> for MetricError {
    fn from(e: cofusion_datasim::DataError) -> Self {
        MetricError::Data(e)
    }
}

pub type Result<T> = std::result::Result<T, MetricError>;
