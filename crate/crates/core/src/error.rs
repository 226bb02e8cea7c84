use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("conjugate symmetry violated: imaginary residue {residue:e} exceeds {tolerance:e}")]
    SymmetryViolation { residue: f64, tolerance: f64 },

    #[error("embedding backend i/o: {0}")]
    BackendIo(String),

    #[error("no precomputed embedding for image {0}")]
    MissingEmbedding(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("image {path} is {actual_height}x{actual_width}, expected {expected_height}x{expected_width}")]
    Shape {
        path: PathBuf,
        expected_height: usize,
        expected_width: usize,
        actual_height: usize,
        actual_width: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("incompatible report: {0}")]
    IncompatibleReport(String),

    #[error("band {band}: {source}")]
    Band {
        band: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("batch item {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("pair {pair_id}: {source}")]
    Pair {
        pair_id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn in_band(self, band: usize) -> Self {
        Error::Band {
            band,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_pair(self, pair_id: u64) -> Self {
        Error::Pair {
            pair_id,
            source: Box::new(self),
        }
    }

    /// Innermost error, with band/batch/pair context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Band { source, .. } | Error::Batch { source, .. } | Error::Pair { source, .. } => {
                source.root()
            }
            other => other,
        }
    }
}
