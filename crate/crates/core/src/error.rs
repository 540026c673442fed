use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its domain.
    #[error("invalid value for `{field}`: {value} ({reason})")]
    InvalidParam { field: &'static str, value: f64, reason: &'static str },

    /// Arguments to a probability kernel are not feasible for the state.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("stationary solver did not converge after {iterations} iterations (residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("quantile {q} exceeds certified cumulative mass {certified}")]
    QuantileOutOfRange { q: f64, certified: f64 },

    #[error("empty sample set")]
    EmptySamples,

    #[error("config error: {0}")]
    Config(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse { line: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidParam { .. } | Error::Config(_) | Error::ConfigParse { .. })
    }
}
