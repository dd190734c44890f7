use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("oracle size guard: {vars} variables + {rows} rows exceeds {limit}")]
    OracleTooLarge { vars: usize, rows: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed instance: field `{field}`: {reason}")]
    MalformedInstance { field: String, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
