use std::path::PathBuf;

use thiserror::Error;

/// Toolkit-wide error type.
///
/// Variants map onto the CLI exit codes: `Usage` -> 1, `Data` -> 2,
/// `Numeric` -> 3. `Io` and `Stage` carry context and map to 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file (CSV layout, non-numeric cells, ...).
    #[error("{path}:{line}: {msg}")]
    Csv {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Invalid parameters, configuration, or CLI usage.
    #[error("{0}")]
    Usage(String),

    /// Data that fails a domain invariant (grid mismatch, empty set,
    /// out-of-domain values, ...).
    #[error("{0}")]
    Data(String),

    /// Numerical failure (rank deficiency, undefined statistic, ...).
    #[error("{0}")]
    Numeric(String),

    /// A preprocessing stage failed for one sample.
    #[error("sample '{id}', stage '{stage}': {source}")]
    Stage {
        id: String,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Csv {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 data/validation, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Csv { .. } | Error::Data(_) => 2,
            Error::Numeric(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
