use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("degenerate class: {class} class has {count} example(s); exact Q needs at least 2 (use the diagonal approximation instead)")]
    DegenerateClass { class: &'static str, count: usize },

    #[error("empty weak-classifier list")]
    NoWeakClassifiers,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite gradient at iteration {iteration}; the quadratic term is likely ill-conditioned")]
    NonFiniteGradient { iteration: usize },

    #[error("warm start is not in the simplex interior: {0}")]
    BadWarmStart(String),

    #[error("reference solver did not converge within {iterations} iterations (stationarity {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("all example weights are zero")]
    ZeroWeights,

    #[error("covariance is singular; increase the ridge term delta (currently {delta:e})")]
    SingularCovariance { delta: f64 },

    #[error("gamma must lie strictly inside (0, 1), got {0}")]
    GammaOutOfDomain(f64),

    #[error("projected variance is zero")]
    ZeroVariance,

    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("image error: {0}")]
    Image(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
