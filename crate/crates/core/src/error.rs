use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-range user input.
    #[error("invalid input: {0}")]
    Input(String),
    /// A request that would exceed a configured size cap.
    #[error("resource limit: {0}")]
    Resource(String),
    /// An iterative method failed to converge.
    #[error("numerical failure: {message} (after {iterations} iterations, last change {last_change:e})")]
    Numerical {
        message: String,
        iterations: usize,
        last_change: f64,
    },
    /// A mathematical invariant that should hold did not.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// A construction produced an empty intermediate set.
    #[error("construction failed: {0}")]
    Construction(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }
}
