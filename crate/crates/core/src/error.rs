use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("degenerate: {0}")]
    Degenerate(String),
    #[error("blow-up: {0}")]
    Blowup(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Convergence(_) => "convergence",
            Error::Regime(_) => "regime",
            Error::Degenerate(_) => "degenerate",
            Error::Blowup(_) => "blowup",
        }
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("exponent p must satisfy p > 1, got {p}")))
    }
}
