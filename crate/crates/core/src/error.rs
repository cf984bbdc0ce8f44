use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid UTF-8 at byte offset {offset}")]
    Decode { offset: usize },

    #[error("{what}, line {line}: {msg}")]
    Parse {
        what: &'static str,
        line: usize,
        msg: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("no events: {0}")]
    NoEvents(String),

    #[error("zero probability under every component for event {event:?} (tune event #{index})")]
    ZeroProbability { event: String, index: usize },

    #[error("malformed operation sequence at operation #{index}: {msg}")]
    Structure { index: usize, msg: String },

    #[error("pair #{index}: {source}")]
    Pair {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line count mismatch: {left} hypotheses vs {right} references")]
    LineCount { left: usize, right: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: &'static str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            what,
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code used by the pipeline runner and the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Argument(_) => 2,
            Error::Numeric(_) | Error::ZeroProbability { .. } => 4,
            Error::Pair { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
