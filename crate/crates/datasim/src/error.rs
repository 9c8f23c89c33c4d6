use std::fmt;

#[derive(Debug)]
pub enum DataError {
    /// File does not start with the HSC1 magic.
    BadMagic { found: [u8; 4] },
    /// Payload length disagrees with the header dimensions.
    PayloadSize { expected: u64, actual: u64 },
    Dimension(String),
    Argument(String),
    Io(std::io::Error),
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadMagic { found } => {
                write!(f, "bad magic: expected \"HSC1\", found {:?}", found)
            }
            Self::PayloadSize { expected, actual } => write!(
                f,
                "truncated payload: expected {expected} bytes, got {actual}"
            ),
            Self::Dimension(s) => write!(f, "dimension error: {s}"),
            Self::Argument(s) => write!(f, "invalid argument: {s}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for DataError {}

impl From<std::io::Error> for DataError {
    fn from(e: std::io::Error) -> Self {
        DataError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, DataError>;
