use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants line up with the command-line exit codes: usage and parse
/// problems are caller mistakes, resource errors are enumeration caps that a
/// caller may lift explicitly, regime errors mean the requested formula does
/// not apply to the given parameters.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("resource cap exceeded: {what} is {value}, cap is {cap}")]
    Resource {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("unsupported parameter regime: {0}")]
    Regime(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("construction invariant violated: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}

pub(crate) fn regime<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Regime(msg.into()))
}
