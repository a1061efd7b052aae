use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors are split in two families so the CLI can map them to exit codes:
/// bad input (exit 2) and numerical failure (exit 1).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input in `{field}`: {msg}")]
    Input { field: String, msg: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("tolerance not met: {0}")]
    Tolerance(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub fn input(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Input {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn conv(msg: impl Into<String>) -> Self {
        Error::NoConvergence(msg.into())
    }

    /// True for errors caused by the caller's data rather than by numerics.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Input { .. } | Error::Precondition(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input { .. } => "input",
            Error::Precondition(_) => "precondition",
            Error::NoConvergence(_) => "no_convergence",
            Error::Tolerance(_) => "tolerance",
            Error::Unsupported(_) => "unsupported",
        }
    }
}
