use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed pcap: {0}")]
    Pcap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("row width mismatch: expected {expected} features, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("training data contains a single class; a binary classifier needs both")]
    SingleClass,

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("exact enumeration over {features} features exceeds the limit of {max}; use the kernel method")]
    TooManyFeatures { features: usize, max: usize },

    #[error("coalition budget {budget} is below the minimum of {min} for {features} features")]
    BudgetTooSmall { budget: usize, min: usize, features: usize },

    #[error("kernel regression system is singular")]
    SingularSystem,

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("schema fingerprint mismatch: model expects {expected}, data has {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("{0}")]
    Unsupported(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}
