use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants split into two families that the CLI maps onto distinct exit
/// codes: data/computation problems and I/O or schema problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate power: {0}")]
    DegeneratePower(String),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("underdetermined: {0}")]
    Underdetermined(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("insufficient cohort: {0}")]
    InsufficientCohort(String),

    #[error("too short: {0}")]
    TooShort(String),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("model format error: {0}")]
    ModelFormat(String),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for I/O, CSV and schema failures (as opposed to numerical ones).
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Csv { .. } | Error::Schema { .. } | Error::ModelFormat(_) => {
                true
            }
            Error::Context { source, .. } => source.is_io(),
            _ => false,
        }
    }

    /// Innermost error, with context layers stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
