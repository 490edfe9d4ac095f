use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The voltage amplitude fell below the `V_MIN` guard.
    #[error("voltage collapse at x = {x}: v = {v:e} is below the guard {v_min:e}")]
    VoltageCollapse { x: f64, v: f64, v_min: f64 },

    #[error("shooting did not converge after {iterations} Newton iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown preset `{0}` (expected one of: no_load, conventional, pv_ev, manufactured)")]
    UnknownPreset(String),

    #[error("{context}: {message}")]
    Io { context: String, message: String },

    /// An error raised while handling one of several scenarios.
    #[error("{source} ({scenario} scenario)")]
    InScenario { scenario: String, source: Box<Error> },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, err: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            message: err.to_string(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::UnknownPreset(_)
            | Error::Domain(_) => 1,
            Error::NotConverged { .. } => 2,
            Error::VoltageCollapse { .. } => 3,
            Error::Io { .. } => 6,
            Error::InScenario { source, .. } => source.exit_code(),
        }
    }
}
