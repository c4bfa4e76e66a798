use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or combination of parameters is outside the supported domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge: value {value:e}, error estimate {abs_error:e}, \
         worst subinterval [{worst_lo:e}, {worst_hi:e}]"
    )]
    Quadrature {
        value: f64,
        abs_error: f64,
        worst_lo: f64,
        worst_hi: f64,
    },

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("insufficient replicas: need at least {needed}, have {have}")]
    InsufficientReplicas { needed: usize, have: usize },

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by invalid input rather than a failed computation.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::Size(_) | Error::Unsupported(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
