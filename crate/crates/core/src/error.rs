use thiserror::Error;

/// Errors raised anywhere in the tapping pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {record}: {message}")]
    Parse { record: String, message: String },

    #[error("schema error at frame {frame}: {message}")]
    Schema { frame: usize, message: String },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("no rater scores to derive a label from")]
    NoLabel,

    #[error("degenerate hand geometry at frame {frame}: {message}")]
    DegenerateGeometry { frame: usize, message: String },

    #[error("insufficient tapping cycles: found {found} peaks, need at least {needed}")]
    InsufficientCycles { found: usize, needed: usize },

    #[error("degenerate cycles: {0} has zero mean")]
    DegenerateCycles(&'static str),

    #[error("column `{column}` has zero variance")]
    ZeroVariance { column: String },

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("Krippendorff's alpha is undefined: {0}")]
    UndefinedAlpha(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse error classes, used by the command-line front end to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numerical,
    Config,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Schema { .. }
            | Error::InvalidRecording(_)
            | Error::NoLabel
            | Error::InvalidInput(_)
            | Error::Io(_) => ErrorClass::Input,
            Error::DegenerateGeometry { .. }
            | Error::InsufficientCycles { .. }
            | Error::DegenerateCycles(_)
            | Error::ZeroVariance { .. }
            | Error::DegenerateTraining(_)
            | Error::UndefinedAlpha(_) => ErrorClass::Numerical,
            Error::Config(_) => ErrorClass::Config,
        }
    }

    pub(crate) fn parse(record: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            record: record.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
