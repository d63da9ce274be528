use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("cannot normalize channel {channel}: {reason}")]
    Normalization { channel: String, reason: String },

    #[error("invalid attack spec: {0}")]
    Spec(String),

    #[error("training failed at epoch {epoch}, batch {batch}: {reason}")]
    Training {
        epoch: usize,
        batch: usize,
        reason: String,
    },

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("timestamp {0} is not covered by any window")]
    Coverage(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Training,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Spec(_) | Error::Json(_) => ErrorClass::Usage,
            Error::Training { .. } => ErrorClass::Training,
            _ => ErrorClass::Data,
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::State(_) => "state",
            Error::Config(_) => "config",
            Error::Schema(_) => "schema",
            Error::Data(_) => "data",
            Error::Normalization { .. } => "normalization",
            Error::Spec(_) => "spec",
            Error::Training { .. } => "training",
            Error::Statistics(_) => "statistics",
            Error::Coverage(_) => "coverage",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
