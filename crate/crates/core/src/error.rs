use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates a documented domain constraint.
    #[error("domain error: {0}")]
    Domain(String),

    /// Scenario or run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Growth factor too large to evaluate (e.g. Γ₁t above the range limit).
    #[error("range error: {0}")]
    Range(String),

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error(
        "Fock truncation overflow at t = {time}: mode {mode} top-level population {population:.3e}"
    )]
    Truncation {
        time: f64,
        mode: String,
        population: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Parse(_) => 2,
            Error::Range(_) | Error::Integration { .. } | Error::Truncation { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
