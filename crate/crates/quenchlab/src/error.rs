use thiserror::Error;

/// Failure classes shared by every module. The CLI maps them to exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("insufficient disorder coverage: {0}")]
    Padding(String),
    #[error("statistical power: {0}")]
    Power(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("incompatible symmetry: {0}")]
    Symmetry(String),
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("assertion `{0}` failed")]
    Assertion(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
