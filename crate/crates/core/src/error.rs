use std::path::PathBuf;

/// Errors produced by rank construction, correlation, imputation, learning
/// and file ingestion.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value for object `{0}`")]
    NonFinite(String),

    #[error("rank {rank} for object `{object}` is outside 1..={n}")]
    RankOutOfRange { object: String, rank: f64, n: usize },

    #[error("rankings are defined over different domains")]
    DomainMismatch,

    #[error("correlation undefined: {0} has zero variance")]
    ZeroVariance(&'static str),

    #[error("expert `{expert}` assigns rank {rank} more than once")]
    DuplicateRank { expert: String, rank: u32 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("missing fold file {0}")]
    MissingFold(PathBuf),

    #[error("singular system: {0}")]
    Singular(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of a numerical nature (as opposed to malformed input).
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::ZeroVariance(_) | Error::Singular(_))
    }
}
