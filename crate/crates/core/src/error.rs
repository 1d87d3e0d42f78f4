use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation was requested outside the range covered by tabulated data.
    #[error("range error: {0}")]
    Range(String),

    /// Evolution operators require `s <= t`.
    #[error("ordering error: expected s <= t, got s = {s}, t = {t}")]
    Ordering { t: f64, s: f64 },

    #[error("resolution error: {points} sample points cannot resolve {modes} modes (need at least {required})")]
    Resolution {
        points: usize,
        modes: usize,
        required: usize,
    },

    #[error("singular matrix: condition estimate {condition:e} exceeds {limit:e}")]
    Singular { condition: f64, limit: f64 },

    /// A Gramian entry fell below the rank threshold.
    #[error("Gramian entry for mode {mode} is {value:e}, below threshold {threshold:e}")]
    NearSingular {
        mode: usize,
        value: f64,
        threshold: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e}, sufficiency value {sufficiency_value:.6})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        sufficiency_value: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    /// All configuration violations found, each prefixed with its field path.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl Error {
    /// Process exit status: 2 validation, 3 numerical, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}
