use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: String,
    },
    #[error("quadrature failed to reach tolerance: {0}")]
    QuadratureFailure(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("kernel series did not converge after {terms} terms (last relative layer size {last_ratio:e})")]
    NoConvergence { terms: usize, last_ratio: f64 },
    #[error("time quadrature singularity is not integrable: {0}")]
    SingularityBlowup(String),
    #[error("Poisson truncation too tight: tail mass {tail:e} beyond n_cut = {n_cut}")]
    TruncationTooTight { n_cut: usize, tail: f64 },
    #[error("solution blew up: |u| = {value:e} exceeds ceiling {ceiling:e} at step {step}")]
    Blowup {
        step: usize,
        value: f64,
        ceiling: f64,
    },
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("ladder has {got} rungs, need at least {need}")]
    InsufficientLadder { got: usize, need: usize },
    #[error("need at least {need} usable lags, got {got}")]
    InsufficientLags { got: usize, need: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(name: &'static str, value: f64, reason: impl Into<String>) -> Error {
    Error::OutOfRange {
        name,
        value,
        reason: reason.into(),
    }
}
