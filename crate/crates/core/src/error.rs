//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by construction, fitting, and prediction.
#[derive(Debug, Error)]
pub enum Error {
    /// A coordinate or value was NaN or infinite.
    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    /// Site and value lists of different length, or an empty observation set.
    #[error("invalid observation set: {0}")]
    InvalidObservations(String),

    /// Two sites closer than the duplicate tolerance.
    #[error("duplicate sites at indices {first} and {second}")]
    DuplicateSites { first: usize, second: usize },

    /// A precondition on an argument was violated.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A full row or column of the binning table received no observation.
    #[error("empty {axis} {index} in two-way binning; use fewer {axis}s")]
    EmptyRowOrColumn { axis: &'static str, index: usize },

    /// No site pair fell within the requested maximum lag.
    #[error("no site pair within max lag {max_lag}")]
    NoPairs { max_lag: f64 },

    /// Every empirical semivariogram value is zero; no model can be fitted.
    #[error("degenerate variogram: all empirical values are zero")]
    DegenerateVariogram,

    /// Drift design matrix is rank deficient (e.g. collinear sites with linear drift).
    #[error("rank-deficient drift design matrix")]
    RankDeficientDrift,

    /// Sites are collinear; the spline polynomial part cannot be identified.
    #[error("collinear sites")]
    CollinearSites,

    /// Reciprocal condition estimate of a linear system fell below the gate.
    #[error("ill-conditioned linear system (reciprocal condition estimate {rcond:.3e})")]
    IllConditioned { rcond: f64 },

    /// Covariance matrix could not be factorized within the jitter budget.
    #[error("covariance matrix not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    /// A leave-one-out refit failed for the named deletion index.
    #[error("leave-one-out fit failed at index {index}: {source}")]
    FitFailure {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// A leave-one-out prediction standard error was (numerically) zero.
    #[error("zero prediction standard error at leave-one-out index {index}")]
    ZeroSigma { index: usize },

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with a pipeline stage label.
    pub fn stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Extension for labelling the error branch of a result with a stage name.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.stage(stage))
    }
}
