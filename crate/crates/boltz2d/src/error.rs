use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the kinetics library.
///
/// `Domain` marks an argument outside an operation's mathematical domain,
/// `Config` an inadmissible parameter combination (the message names the
/// violated invariant), and `Numeric` a quadrature or overflow failure with
/// the accuracy that was actually reached.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Domain(String),
    Config(String),
    Numeric { message: String, achieved: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Numeric { message, achieved } => {
                write!(f, "numeric failure: {message} (achieved tolerance {achieved:e})")
            }
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, achieved: f64) -> Self {
        Error::Numeric { message: msg.into(), achieved }
    }
}
