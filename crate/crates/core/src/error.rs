//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error enumeration.
///
/// Mathematical verdicts (a span check failing, a bound not holding) are
/// never errors; they are data in the corresponding report types. Errors are
/// reserved for misuse of an operation, unreachable accuracy, resource caps
/// and IO.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Non-finite or otherwise malformed numeric input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Evaluation of a singular kernel at its singularity.
    #[error("singular evaluation: {0}")]
    Singularity(String),

    /// The configured truncation cannot reach the requested tolerance.
    #[error("accuracy unreachable: requested {requested:e}, achievable {achievable:e} ({detail})")]
    Accuracy {
        requested: f64,
        achievable: f64,
        detail: String,
    },

    /// An operation precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A configured resource cap (bracket closure size, Newton restarts, ...) was hit.
    #[error("resource cap exceeded: {0}")]
    Resource(String),

    /// Covariation requested on a trajectory without a Brownian record.
    #[error("trajectory carries no Brownian record; covariation is undefined")]
    EmptyCovariation,

    /// A probe run needed by a finite-difference estimate terminated early.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// A setup oracle (e.g. the collapse configuration solver) failed to produce its object.
    #[error("setup failed: {0}")]
    Setup(String),

    /// Configuration file problem, always naming the offending key.
    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// Malformed data file on read.
    #[error("malformed file: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

impl CoreError {
    /// True for errors that indicate user-side misuse (CLI exit code 1)
    /// rather than a runtime failure (exit code 2).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            CoreError::InvalidInput(_)
                | CoreError::Precondition(_)
                | CoreError::Config { .. }
                | CoreError::Accuracy { .. }
        )
    }
}
