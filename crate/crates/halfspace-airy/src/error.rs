//! Crate-wide error type.

use num_complex::Complex64;
use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report.
///
/// The variants are grouped by the exit code the command-line tool maps them
/// to: usage/input problems (2), numerical problems (3) and I/O (4).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input data (odd dimension, broken invariant, bad parameter).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration file or command line could not be understood.
    #[error("usage error: {0}")]
    Usage(String),

    /// An exponential-cost oracle was asked for a problem that is too large.
    #[error("size limit exceeded: dimension {dim} > {max}")]
    SizeLimit { dim: usize, max: usize },

    /// A kernel was not block skew-symmetric on the requested points.
    #[error("kernel inconsistency: {0}")]
    Inconsistency(String),

    /// A scalar function was evaluated at a pole or on a branch cut.
    #[error("singular argument: {0}")]
    Singularity(String),

    /// An integrand produced a non-finite value at a quadrature node.
    #[error("non-finite integrand value at node {node} ({context})")]
    NonFinite { node: Complex64, context: String },

    /// Contour or radius constraints could not be met.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A point does not lie on the required scaling lattice.
    #[error("lattice error: {0}")]
    Lattice(String),

    /// The 22-block was requested on the diagonal where it is not defined.
    #[error("diagonal ambiguity: {0}; choose the 'upper-formula' convention to evaluate it")]
    DiagonalAmbiguity(String),

    /// A series or discretisation is numerically ill-conditioned.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// A computed quantity violated a consistency requirement.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// A rejection sampler ran out of attempts.
    #[error("rejection budget of {attempts} attempts exhausted")]
    RejectionBudget { attempts: u64 },

    /// Reading or writing a file failed.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::InvalidInput(_) => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}
