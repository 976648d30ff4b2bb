//! Error type shared by the numeric modules.

use std::fmt;

/// Errors reported by the estimation toolkit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A caller-supplied argument violated a documented precondition.
    InvalidArgument(&'static str),
    /// A matrix required to have full column rank was numerically rank
    /// deficient; `column` is the first offending column.
    SingularMatrix { column: usize },
    /// Fewer local minima were found than the caller requested.
    MinimaShortage { requested: usize, found: usize },
    /// The detection loop kept adding components until the model saturated.
    ModelSaturated { max_components: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::SingularMatrix { column } => {
                write!(f, "matrix is numerically rank deficient at column {column}")
            }
            Error::MinimaShortage { requested, found } => {
                write!(
                    f,
                    "requested {requested} local minima but only found {found}"
                )
            }
            Error::ModelSaturated { max_components } => {
                write!(
                    f,
                    "detection loop reached the model limit of {max_components} components"
                )
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
