use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller violated an operation's preconditions (bad dimension, out-of-range parameter).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A proximal system could not be factorized.
    #[error("prox oracle failure for client {client} at gamma={gamma}: {reason}")]
    OracleFailure {
        client: usize,
        gamma: f64,
        reason: String,
    },

    /// Spectral estimation did not converge within its iteration cap.
    #[error("spectral estimation did not converge after {iterations} iterations (last Rayleigh quotient {last_rayleigh})")]
    Estimation {
        iterations: usize,
        last_rayleigh: f64,
    },

    #[error("problem generation failed: {0}")]
    Generation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// An oracle failure during a run, tagged with the round it happened in.
    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    /// A failure inside one run of an experiment, tagged with the run's label.
    #[error("run {label}: {source}")]
    Run {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Whether the error is a validation problem (as opposed to a numerical failure).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Contract(_) | Error::Config(_) | Error::Io(_) => true,
            Error::Round { source, .. } | Error::Run { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    /// Short machine-readable name of the innermost error.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::OracleFailure { .. } => "oracle_failure",
            Error::Estimation { .. } => "estimation",
            Error::Generation(_) => "generation",
            Error::Config(_) => "config",
            Error::Round { source, .. } | Error::Run { source, .. } => source.kind(),
            Error::Io(_) => "io",
        }
    }

    /// Process exit code used by the CLI: 2 for validation, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            2
        } else {
            3
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
