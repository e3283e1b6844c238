use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver did not reach its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A partition sum needed more terms than the configured hard limit.
    #[error("truncation bound {needed} exceeds the hard limit {limit}")]
    Truncation { needed: usize, limit: usize },

    /// Adaptive quadrature failed to meet its tolerance.
    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Domain(_))
    }
}
