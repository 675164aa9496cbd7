use std::fmt;

use thiserror::Error;

/// Stable identifiers for ingest failures, reported alongside the message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestCode {
    Io,
    Syntax,
    Schema,
    LabelOutOfRange,
    UnsortedTimes,
    ScoresLength,
    EvalTimeMismatch,
}

impl IngestCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IngestCode::Io => "E_IO",
            IngestCode::Syntax => "E_SYNTAX",
            IngestCode::Schema => "E_SCHEMA",
            IngestCode::LabelOutOfRange => "E_LABEL_RANGE",
            IngestCode::UnsortedTimes => "E_UNSORTED_TIMES",
            IngestCode::ScoresLength => "E_SCORES_LENGTH",
            IngestCode::EvalTimeMismatch => "E_EVAL_TIME",
        }
    }
}

impl fmt::Display for IngestCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("[{code}] line {line}: {message}")]
    Input {
        code: IngestCode,
        /// 1-based line number, 0 when the failure is not tied to a line.
        line: usize,
        message: String,
    },

    /// Invalid data built in memory rather than read from a file.
    #[error("[{code}] {message}")]
    Invalid { code: IngestCode, message: String },

    #[error("[{code}] {message}")]
    Io {
        code: IngestCode,
        message: String,
        #[source]
        source: std::io::Error,
    },

    #[error("empty evaluation: {0}")]
    EmptyEvaluation(String),

    #[error("instance too large for exhaustive enumeration: {size} > {limit}")]
    SizeGuard { size: usize, limit: usize },
}

impl Error {
    pub fn input(code: IngestCode, line: usize, message: impl Into<String>) -> Self {
        Error::Input {
            code,
            line,
            message: message.into(),
        }
    }

    pub fn invalid(code: IngestCode, message: impl Into<String>) -> Self {
        Error::Invalid {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            code: IngestCode::Io,
            message: context.into(),
            source,
        }
    }

    /// Process exit code: 3 for config errors, 2 for everything caused by the inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            _ => 2,
        }
    }

    pub fn ingest_code(&self) -> Option<IngestCode> {
        match self {
            Error::Input { code, .. } | Error::Invalid { code, .. } | Error::Io { code, .. } => Some(*code),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
