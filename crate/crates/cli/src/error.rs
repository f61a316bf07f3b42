use serde_json::json;

/// Bad flags or config rather than a failed computation.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn is_usage(err: &anyhow::Error) -> bool {
    err.downcast_ref::<UsageError>().is_some()
}

fn library_kind(e: &lacboost::Error) -> &'static str {
    use lacboost::Error::*;
    match e {
        DimensionMismatch { .. } => "dimension_mismatch",
        InvalidDataset(_) => "invalid_dataset",
        DegenerateClass { .. } => "degenerate_class",
        NoWeakClassifiers => "no_weak_classifiers",
        InvalidArgument(_) => "invalid_argument",
        NonFiniteGradient { .. } => "non_finite_gradient",
        BadWarmStart(_) => "bad_warm_start",
        NoConvergence { .. } => "no_convergence",
        ZeroWeights => "zero_weights",
        SingularCovariance { .. } => "singular_covariance",
        GammaOutOfDomain(_) => "gamma_out_of_domain",
        ZeroVariance => "zero_variance",
        OutOfBounds(_) => "out_of_bounds",
        Io(_) => "io",
        Csv(_) => "csv",
        Json(_) => "json",
        Image(_) => "image",
    }
}

pub fn kind(err: &anyhow::Error) -> &'static str {
    if is_usage(err) {
        "usage"
    } else if let Some(e) = err.downcast_ref::<lacboost::Error>() {
        library_kind(e)
    } else if err.downcast_ref::<std::io::Error>().is_some() {
        "io"
    } else if err.downcast_ref::<serde_json::Error>().is_some() {
        "json"
    } else {
        "error"
    }
}

/// One JSON line on stderr.
pub fn report(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
}
