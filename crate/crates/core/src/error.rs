use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Unknown family name.
    NotFound(String),
    /// An argument lies outside the admissible domain (γ range, support,
    /// tail probability, pre-monotone region, ...).
    Domain(String),
    /// A quadrature or root solve did not reach its tolerance.
    Numerical { what: String, achieved: f64 },
    /// The local step is zero or undefined (`u = 0` or `S_xγ = 0`).
    DegenerateStep(String),
    /// An experiment design is infeasible.
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(what: impl Into<String>, achieved: f64) -> Self {
        Error::Numerical {
            what: what.into(),
            achieved,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "NotFound",
            Error::Domain(_) => "DomainError",
            Error::Numerical { .. } => "NumericalError",
            Error::DegenerateStep(_) => "DegenerateStep",
            Error::Config(_) => "ConfigError",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotFound(name) => write!(f, "unknown family `{name}`"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numerical { what, achieved } => {
                write!(f, "numerical error: {what} (achieved error estimate {achieved:e})")
            }
            Error::DegenerateStep(msg) => write!(f, "degenerate step: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
