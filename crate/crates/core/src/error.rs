use thiserror::Error;

/// Errors raised by the channel routines.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type the
/// caller worked in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid channel parameters: {0}")]
    InvalidParams(String),

    #[error("kernel {kernel} requires drift v > 0")]
    IncompatibleKernel { kernel: &'static str },

    #[error("zero drift: {0}")]
    ZeroDrift(String),

    #[error(
        "quadrature did not converge: value {value:e}, error estimate {error_estimate:e} \
         after {subdivisions} subdivisions"
    )]
    NonConvergence {
        value: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("integrand is not finite at x = {0:e}")]
    NonFiniteIntegrand(f64),

    #[error("distribution is not normalized: total mass {0:.12}")]
    Unnormalized(f64),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::NonFiniteIntegrand(_) | Error::Unnormalized(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
