use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("numeric fault: {0}")]
    NumericFault(String),

    #[error("invalid token {token}: {reason}")]
    InvalidToken { token: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid supervision signal: {0}")]
    InvalidSignal(String),

    #[error("invalid state/signal pairing: {0}")]
    InvalidPairing(String),

    #[error("misconfiguration: {0}")]
    Misconfiguration(String),

    #[error("corrupt checkpoint at byte offset {offset}: {reason}")]
    CorruptCheckpoint { offset: usize, reason: String },

    #[error("retention ratio undefined for task `{0}` (base score is 0)")]
    UndefinedRatio(String),

    #[error("pretraining stopped at the step cap below threshold (copy score {copy:.3}); final scores: {scores}")]
    PretrainFailure { copy: f64, scores: String },

    #[error("workdir {0} is locked by another pipeline")]
    Locked(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (config, flags, pairings)
    /// rather than by a failure while running.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Misconfiguration(_)
                | Error::InvalidPairing(_)
                | Error::InvalidArgument(_)
                | Error::Json { .. }
        )
    }
}
