use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::{Label, QMode};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, column_means, covariance};
use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Postprocessed<T> {
    pub w: Vec<T>,
    pub b: T,
    pub mu1: Vec<T>,
    pub mu2: Vec<T>,
    /// The class means coincide, so there is no direction to separate along.
    pub degenerate: bool,
    /// Number of coordinates with `μ₁ − μ₂ < 0`.
    pub negative_gap_components: usize,
}

/// Closed-form LAC (`Σ = Σ₁`) or LDA (`Σ = Σ₁ + Σ₂`) weights over fixed weak
/// outputs: `w = (Σ + δI)⁻¹(μ₁ − μ₂)`, `b = wᵀμ₂`.
pub fn lac_lda_postprocess<T: Scalar, R: AsRef<[T]>>(
    h_outputs: &[R],
    labels: &[Label],
    mode: QMode,
    delta: T,
) -> Result<Postprocessed<T>> {
    if h_outputs.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: h_outputs.len() });
    }
    let n = h_outputs.first().map_or(0, |r| r.as_ref().len());
    if n == 0 {
        return Err(Error::NoWeakClassifiers);
    }
    if h_outputs.iter().any(|r| r.as_ref().len() != n) {
        return Err(Error::InvalidArgument("weak-output rows differ in length".into()));
    }
    if !(delta >= T::zero()) {
        return Err(Error::InvalidArgument("delta must be non-negative".into()));
    }
    let pos: Vec<&[T]> = h_outputs.iter().zip(labels).filter(|(_, &l)| l == Label::Positive).map(|(r, _)| r.as_ref()).collect();
    let neg: Vec<&[T]> = h_outputs.iter().zip(labels).filter(|(_, &l)| l == Label::Negative).map(|(r, _)| r.as_ref()).collect();
    if pos.len() < 2 {
        return Err(Error::DegenerateClass { class: "positive", count: pos.len() });
    }
    if neg.len() < 2 {
        return Err(Error::DegenerateClass { class: "negative", count: neg.len() });
    }
    let mu1 = column_means(&pos);
    let mu2 = column_means(&neg);
    let gap: Vec<T> = mu1.iter().zip(&mu2).map(|(&a, &b)| a - b).collect();
    let negative_gap_components = gap.iter().filter(|&&g| g < T::zero()).count();
    if negative_gap_components > 0 {
        warn!("{negative_gap_components} weak learners have a lower positive than negative mean");
    }
    if gap.iter().all(|&g| g == T::zero()) {
        return Ok(Postprocessed {
            w: vec![T::zero(); n],
            b: T::zero(),
            mu1,
            mu2,
            degenerate: true,
            negative_gap_components,
        });
    }

    let mut sigma = covariance(&pos);
    if mode == QMode::Lda {
        for (s, v) in sigma.iter_mut().zip(covariance(&neg)) {
            *s = *s + v;
        }
    }
    for i in 0..n {
        sigma[i * n + i] = sigma[i * n + i] + delta;
    }
    let w = cholesky_solve(&sigma, &gap).ok_or(Error::SingularCovariance { delta: delta.as_f64() })?;
    let b = dot(&w, &mu2);
    Ok(Postprocessed { w, b, mu1, mu2, degenerate: false, negative_gap_components })
}
