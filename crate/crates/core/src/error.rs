use alloc::string::String;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series has a zero leading coefficient and cannot be inverted")]
    SingularLead,

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("need at least {needed} entries, got {got}")]
    Arity { needed: usize, got: usize },

    #[error("quadrature did not converge: partial estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("degree {0} has no nonzero eigenvalue")]
    EmptyDegree(usize),

    #[error("spectrum tail has no certified growth law")]
    UnsupportedTail,

    #[error("invalid spectrum line {index}: {reason}")]
    InvalidLine { index: usize, reason: String },

    #[error("omitted spectral tail {bound:e} exceeds tolerance at t = {t}")]
    TailNotNegligible { t: f64, bound: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
