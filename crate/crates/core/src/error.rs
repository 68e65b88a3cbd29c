use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("{0} is empty")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dense {n}x{n} matrix needs {required} bytes, over the {budget} byte budget")]
    MemoryBudget {
        n: usize,
        required: u64,
        budget: u64,
    },

    #[error("instance has {n} items, over the oracle limit of {max}")]
    SizeGuard { n: usize, max: usize },

    #[error("linear system is numerically singular: {0}")]
    Singular(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("singular value decomposition failed to converge")]
    SvdFailed,

    #[error("bad container: {0}")]
    Format(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Coarse failure class, used by the CLI to pick an exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Config,
            Error::Io { .. }
            | Error::MalformedRow { .. }
            | Error::Empty(_)
            | Error::DimensionMismatch { .. }
            | Error::Format(_)
            | Error::Json(_) => ErrorKind::Data,
            Error::MemoryBudget { .. }
            | Error::SizeGuard { .. }
            | Error::Singular(_)
            | Error::NonFinite(_)
            | Error::SvdFailed => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}
