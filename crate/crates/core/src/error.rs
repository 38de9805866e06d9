use thiserror::Error;

use crate::book::BookError;
use crate::classifier::ClassifyError;
use crate::seasonality::SeasonalityError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Book(#[from] BookError),
    #[error("classification failed: {0}")]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Seasonality(#[from] SeasonalityError),
    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy { kind: &'static str, name: String, known: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot inject shock: {0}")]
    Shock(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Process exit code: 1 for input problems, 2 for internal invariant
    /// violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Book(e) if e.is_internal() => 2,
            Error::Classify(_) | Error::Invariant(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
