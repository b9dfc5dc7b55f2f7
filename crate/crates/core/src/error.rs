use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// A value parsed but broke a documented invariant.
    #[error("invariant violated ({field}): {message}")]
    Invariant { field: String, message: String },

    /// Error tied to one record of a JSON Lines file (0-based index).
    #[error("record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing prediction horizon {0} s")]
    MissingHorizon(f64),

    #[error("degenerate classes: {positives} positives, {negatives} negatives")]
    DegenerateClasses { positives: usize, negatives: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("time {t} s outside ego coverage [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("history too short: {got} states, need at least {need}")]
    HistoryTooShort { got: usize, need: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown layout {0:?} (expected straight_road, zebra_road or refuge_road)")]
    UnknownLayout(String),

    #[error("scene {0:?} has no simulator metadata")]
    NotSimulated(String),

    #[error("unknown track {0:?}")]
    UnknownTrack(String),
}

impl Error {
    pub fn invariant(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invariant {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn from_json(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    pub(crate) fn at_record(self, index: usize) -> Self {
        Error::Record {
            index,
            source: Box::new(self),
        }
    }
}
