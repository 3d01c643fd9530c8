use thiserror::Error;

/// Errors raised by the design engine.
///
/// `Domain` and `Invalid` describe bad inputs (the caller can fix them);
/// `Numeric` means a well-formed input hit a numerical failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("index {index} out of range for {len} baskets")]
    Index { index: usize, len: usize },

    #[error("numeric failure in {op}: {msg}")]
    Numeric { op: &'static str, msg: String },

    #[error("no feasible tuning candidate: {0}")]
    Infeasible(String),

    #[error("resource failure: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn numeric(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numeric { op, msg: msg.into() }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Dimension { what, got, expected })
    }
}
