use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed distribution or censoring text, with the byte offset of the problem.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("no observations selected")]
    EmptySelection,

    #[error("no events in dataset")]
    NoEvents,

    #[error("monotone likelihood: {0}")]
    MonotoneLikelihood(String),

    #[error("separation: |beta| = {beta:.3} exceeded 20 at iteration {iteration}")]
    Separation { beta: f64, iteration: usize },

    #[error("Newton-Raphson did not converge in {iterations} iterations (log-likelihood trace: {trace:?})")]
    NonConvergence { iterations: usize, trace: Vec<f64> },

    #[error("fit did not converge")]
    NotConverged,

    #[error("no comparable pairs")]
    NoComparablePairs,

    #[error("insufficient events: {0}")]
    InsufficientEvents(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input (as opposed to numerical or model failures).
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Parse { .. } | Error::InvalidData(_) | Error::Csv(_) | Error::Io(_)
        )
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
