use alloc::string::String;

use crate::market::Group;

/// Errors raised by the pricing kernel.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scalar that must be strictly positive was not.
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    /// The Feller condition 2κθ/σ² ≥ 1 fails for one belief group.
    #[error("Feller condition violated for group {group}: 2*kappa*theta/sigma^2 = {ratio} < 1")]
    Feller { group: Group, ratio: f64 },

    /// Argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A special-function evaluation did not converge.
    #[error("{function}({a}, {b}, {x}) failed to converge: {reason}")]
    Evaluation {
        function: &'static str,
        a: f64,
        b: f64,
        x: f64,
        reason: &'static str,
    },

    /// The operation is not defined for this parameter regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// An iterative solver hit its iteration cap.
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The discrete scheme lost monotonicity.
    #[error("scheme construction error: {0}")]
    Scheme(String),

    /// An internal consistency check failed.
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn regime(msg: impl Into<String>) -> Error {
    Error::Regime(msg.into())
}
