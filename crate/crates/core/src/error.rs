use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// The variants fall into two families: problems with the caller's input
/// (`Domain`, `DimensionMismatch`, `DegenerateSample`, `Format`, `Io`,
/// `Capacity`) and numerical trouble discovered while computing
/// (`Singular`, `NumericalFailure`, `DegenerateInput`, `DegenerateKernel`,
/// `ExcessiveFailures`). [`Error::is_numerical`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("matrix is singular or ill-conditioned (condition number {cond:.3e})")]
    Singular { cond: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("kernels {0} and {1} are perfectly correlated; remove duplicate kernels from the menu")]
    DegenerateKernel(usize, usize),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("method {method}: {failures} of {trials} trials failed (more than 1%)")]
    ExcessiveFailures {
        method: String,
        failures: usize,
        trials: usize,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that arise from the numerics rather than from malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NumericalFailure(_)
                | Error::DegenerateInput(_)
                | Error::DegenerateKernel(..)
                | Error::ExcessiveFailures { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
