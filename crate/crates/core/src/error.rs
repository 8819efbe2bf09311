use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::series::MonthKey;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: column `{column}` not found")]
    Schema { column: String },

    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("parse error at row {row}, column `{column}`: cannot read `{value}` as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("coverage error: series `{series}` does not cover {first}..={last}")]
    Coverage {
        series: String,
        first: MonthKey,
        last: MonthKey,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("singular design: column(s) {} are collinear or zero", .columns.join(", "))]
    SingularDesign { columns: Vec<String> },

    #[error("insufficient data for {context}: need {needed}, have {available}")]
    InsufficientData {
        context: String,
        needed: usize,
        available: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate loadings: {0}")]
    DegenerateLoadings(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
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

    pub fn insufficient(context: impl Into<String>, needed: usize, available: usize) -> Self {
        Error::InsufficientData {
            context: context.into(),
            needed,
            available,
        }
    }

    /// Wraps the error with a description of where it happened.
    pub fn context(self, context: impl fmt::Display) -> Self {
        Error::Context {
            context: context.to_string(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self.root() {
            Error::Parameter(_) => ErrorClass::Config,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Schema { .. }
            | Error::Ingestion { .. }
            | Error::Parse { .. }
            | Error::Alignment(_)
            | Error::Coverage { .. }
            | Error::InsufficientData { .. } => ErrorClass::Data,
            Error::DegenerateInput(_)
            | Error::SingularDesign { .. }
            | Error::DegenerateLoadings(_)
            | Error::Numerical(_)
            | Error::Undefined(_) => ErrorClass::Numerical,
            Error::Context { .. } => unreachable!("root never returns a context wrapper"),
        }
    }
}

/// Adds context to the error branch of a `Result`.
pub trait ResultExt<T> {
    fn context<C: fmt::Display>(self, context: C) -> Result<T>;
    fn with_context<C: fmt::Display, F: FnOnce() -> C>(self, f: F) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context<C: fmt::Display>(self, context: C) -> Result<T> {
        self.map_err(|e| e.context(context))
    }

    fn with_context<C: fmt::Display, F: FnOnce() -> C>(self, f: F) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}
