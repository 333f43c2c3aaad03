use thiserror::Error;

/// Errors raised by the numerical kernels, engines and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument `{name}` = {value} is outside the domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("constellation order M = {0} is invalid (need M >= 2)")]
    InvalidOrder(usize),

    #[error("symbol index {index} out of range for M = {order}")]
    IndexOutOfRange { index: usize, order: usize },

    #[error("channel block is degenerate (sum of squared amplitudes is {0:e})")]
    DegenerateChannel(f64),

    #[error("{what} did not converge after {terms} terms")]
    NonConvergence { what: &'static str, terms: usize },

    #[error("{what}: adaptive quadrature did not reach tolerance (estimated error {error:e})")]
    Quadrature { what: &'static str, error: f64 },

    #[error("outside the validity regime of {what}: {reason}")]
    Regime { what: &'static str, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        reason,
    }
}
