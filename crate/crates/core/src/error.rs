use thiserror::Error;

/// Errors raised by the library.
///
/// Analyses that *report* on their input (validation, nonsignaling checks,
/// LP verdicts) return reports rather than errors; `Error` is reserved for
/// malformed input and exceeded resource limits.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("resource limit exceeded: {what} needs {count}, cap is {cap}")]
    Resource { what: String, count: u128, cap: u128 },

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
