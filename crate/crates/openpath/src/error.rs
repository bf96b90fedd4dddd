//! Error types shared across the crate.
//!
//! Every fallible operation returns [`Error`]; the CLI maps variants to
//! process exit codes (2 = usage, 3 = data, 4 = numerical/accuracy).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad flags, unit tags, out-of-range configuration.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed or physically inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Fewer samples than an estimator needs.
    #[error("insufficient data: {context} needs at least {needed} samples, got {got}")]
    InsufficientData {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    /// A correlation matrix with a negative eigenvalue beyond round-off tolerance.
    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    /// The spatial variance meets or exceeds the free-particle bound
    /// `hbar^2 / (M kB T)`; no confined-motion frequency reproduces it.
    #[error("no bound-state signal: sigma^2 = {sigma2:.6e} A^2 >= free-particle bound {bound:.6e} A^2")]
    NoBoundState { sigma2: f64, bound: f64 },

    /// An iterative method stopped before reaching its accuracy target.
    #[error("accuracy error in {context}: achieved {achieved:.3e}, required {required:.3e}")]
    Accuracy {
        context: &'static str,
        achieved: f64,
        required: f64,
    },

    /// Eigensolver or other dense-linear-algebra failure.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Data(_) | Error::InsufficientData { .. } | Error::Io(_) => 3,
            Error::InvalidCorrelation(_)
            | Error::NoBoundState { .. }
            | Error::Accuracy { .. }
            | Error::Numerical(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
