use thiserror::Error;

/// Errors raised while reading instances, building models, contracting
/// networks or searching.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: duplicate entry {what}")]
    DuplicateEntry { line: usize, what: String },

    #[error("index error: {0}")]
    Index(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("instance too large: {count} states exceed limit {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("cannot compress a zero-norm boundary state")]
    DegenerateState,

    #[error("contraction degenerate at site {position}: all conditional weights vanished")]
    ContractionDegenerate { position: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical pipeline rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Numeric(_) | Error::DegenerateState | Error::ContractionDegenerate { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
