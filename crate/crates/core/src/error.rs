use std::path::PathBuf;

use thiserror::Error;

use crate::interval::Enclosure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative procedure ran out of budget. `best` carries the tightest
    /// certified enclosure obtained so far, when one exists.
    #[error("resource exhausted: {message}")]
    Resource {
        message: String,
        best: Option<Enclosure>,
    },

    /// Malformed configuration or input text. `field` names the offending key.
    #[error("usage error at `{field}`: {message}")]
    Usage { field: String, message: String },

    #[error("cannot write to {path:?}: {message}")]
    Environment { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Usage {
            field: field.into(),
            message: msg.into(),
        }
    }
}
