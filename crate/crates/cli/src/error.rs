use std::fmt;

/// Top-level failure categories, mapped to stable exit codes:
/// usage errors exit 1, data errors exit 2, numerical failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Data(s) => write!(f, "data error: {s}"),
            CliError::Numerical(s) => write!(f, "numerical failure: {s}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

impl From<cofusion_datasim::DataError> for CliError {
    fn from(e: cofusion_datasim::DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<cofusion_model::ModelError> for CliError {
    fn from(e: cofusion_model::ModelError) -> Self {
        match e {
            cofusion_model::ModelError::Config(msg) => CliError::Usage(format!("config: {msg}")),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<cofusion_objective::ObjectiveError> for CliError {
    fn from(e: cofusion_objective::ObjectiveError) -> Self {
        match e {
            cofusion_objective::ObjectiveError::NonFinite { step } => {
                CliError::Numerical(format!("non-finite loss at step {step}"))
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<cofusion_metrics::MetricError> for CliError {
    fn from(e: cofusion_metrics::MetricError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<cofusion_tensor::TensorError> for CliError {
    fn from(e: cofusion_tensor::TensorError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("i/o error: {e}"))
    }
}
