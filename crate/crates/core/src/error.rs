use thiserror::Error;

/// Errors produced by the inversion, sampling and certification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instrument response underflows at (u, v) = ({u}, {v}): |H(u,0) H(0,v)| = {magnitude:e}")]
    ResponseUnderflow { u: f64, v: f64, magnitude: f64 },

    #[error("linear program did not converge within {0} pivots")]
    LpIterationLimit(usize),

    #[error("linear program is {0}")]
    LpStatus(&'static str),

    #[error("feasibility is not monotone in |s|: feasible at {feasible}, infeasible at {infeasible}")]
    NonMonotone { feasible: f64, infeasible: f64 },

    #[error("characteristic-function fit failed: {0}")]
    FitFailed(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidParameter(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
