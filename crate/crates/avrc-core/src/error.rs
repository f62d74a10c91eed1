//! Error type shared across the crate.

/// Errors raised by model construction, fitting, clustering and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shapes of the supplied operands are inconsistent.
    #[error("dimension mismatch in {context}: {details}")]
    Dimension {
        context: &'static str,
        details: String,
    },

    /// An input carried a NaN or infinite entry.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// A design matrix that must have full column rank does not.
    #[error("rank-deficient design in {context}: rank {rank} < {cols} columns")]
    RankDeficient {
        context: &'static str,
        rank: usize,
        cols: usize,
    },

    /// A covariance matrix failed the positive-semidefiniteness check.
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    /// A contract precondition was violated by the caller.
    #[error("contract violation in {context}: {details}")]
    Contract {
        context: &'static str,
        details: String,
    },

    /// A configuration file or value is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A data file is malformed or inconsistent with its schema.
    #[error("invalid data: {0}")]
    Data(String),

    /// A numerical routine failed to produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dimension(context: &'static str, details: impl Into<String>) -> Self {
        Error::Dimension {
            context,
            details: details.into(),
        }
    }

    pub fn contract(context: &'static str, details: impl Into<String>) -> Self {
        Error::Contract {
            context,
            details: details.into(),
        }
    }
}
