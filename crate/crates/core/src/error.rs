use thiserror::Error;

/// Errors produced by the simulation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error(
        "eigensolver did not converge: {iterations} Lanczos steps, {restarts} restarts, \
         residual {residual:.3e} (tolerance {tolerance:.3e})"
    )]
    NotConverged {
        iterations: usize,
        restarts: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("bracketing failed: {0}")]
    Bracketing(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration failed at t = {t}: {reason} (step {step:.3e})")]
    Integration { t: f64, step: f64, reason: String },

    #[error("at chi = {chi}: {source}")]
    AtGridPoint {
        chi: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_chi(chi: f64, source: Error) -> Self {
        Error::AtGridPoint {
            chi,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
