//! Worst-case accuracy analysis for linear classifiers under the biased
//! minimax probability model, plus margin and covariance diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::covariance;
use crate::scalar::{dot, Scalar};

pub const DEFAULT_GAMMA_FLOOR: f64 = 1e-6;

/// Distribution family assumed for the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionFamily {
    /// Known mean and covariance only.
    General,
    Symmetric,
    SymmetricUnimodal,
    Gaussian,
}

impl DistributionFamily {
    pub const ALL: [DistributionFamily; 4] = [
        DistributionFamily::General,
        DistributionFamily::Symmetric,
        DistributionFamily::SymmetricUnimodal,
        DistributionFamily::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistributionFamily::General => "general",
            DistributionFamily::Symmetric => "symmetric",
            DistributionFamily::SymmetricUnimodal => "symmetric_unimodal",
            DistributionFamily::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for DistributionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF: rational approximation refined by one
/// Halley step against [`normal_cdf`].
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Coefficient turning the worst-case constraint `P(wᵀx ≥ b) ≥ γ` into
/// `wᵀμ − b ≥ φ(γ)·√(wᵀΣw)`.
pub fn phi<T: Scalar>(gamma: T, family: DistributionFamily) -> Result<T> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(Error::GammaOutOfDomain(gamma.as_f64()));
    }
    let half = T::lit(0.5);
    Ok(match family {
        DistributionFamily::General => (gamma / (T::one() - gamma)).sqrt(),
        DistributionFamily::Symmetric | DistributionFamily::SymmetricUnimodal => {
            if gamma <= half {
                return Ok(T::zero());
            }
            let s = (T::one() / (T::lit(2.0) * (T::one() - gamma))).sqrt();
            if family == DistributionFamily::Symmetric {
                s
            } else {
                T::lit(2.0 / 3.0) * s
            }
        }
        DistributionFamily::Gaussian => T::lit(normal_quantile(gamma.as_f64())),
    })
}

/// Largest `γ` with `φ(γ) ≤ s`, or `None` when no `γ ∈ (0, 1)` qualifies.
pub fn phi_inverse<T: Scalar>(s: T, family: DistributionFamily) -> Option<T> {
    let one = T::one();
    let half = T::lit(0.5);
    match family {
        DistributionFamily::General => (s > T::zero()).then(|| s * s / (one + s * s)),
        DistributionFamily::Symmetric => {
            if s > one {
                Some(one - one / (T::lit(2.0) * s * s))
            } else {
                (s >= T::zero()).then_some(half)
            }
        }
        DistributionFamily::SymmetricUnimodal => {
            if s > T::lit(2.0 / 3.0) {
                Some(one - T::lit(2.0) / (T::lit(9.0) * s * s))
            } else {
                (s >= T::zero()).then_some(half)
            }
        }
        DistributionFamily::Gaussian => s.is_finite().then(|| T::lit(normal_cdf(s.as_f64()))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WorstCaseAccuracy<T> {
    pub gamma: T,
    pub family: DistributionFamily,
    /// `(wᵀμ₁ − b)/√(wᵀΣ₁w)`.
    pub s: T,
    /// `s` fell outside the range of `φ`; `gamma` was clipped into `(0, 1)`.
    pub out_of_range: bool,
}

/// Worst-case positive-class accuracy of `sign(wᵀx − b)` for the given family.
pub fn worst_case_gamma<T: Scalar>(
    w: &[T],
    b: T,
    mu1: &[T],
    sigma1: &[T],
    family: DistributionFamily,
) -> Result<WorstCaseAccuracy<T>> {
    worst_case_gamma_with_floor(w, b, mu1, sigma1, family, T::lit(DEFAULT_GAMMA_FLOOR))
}

pub fn worst_case_gamma_with_floor<T: Scalar>(
    w: &[T],
    b: T,
    mu1: &[T],
    sigma1: &[T],
    family: DistributionFamily,
    floor: T,
) -> Result<WorstCaseAccuracy<T>> {
    let n = w.len();
    if mu1.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mu1.len() });
    }
    if sigma1.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: sigma1.len() });
    }
    let sw: Vec<T> = sigma1.chunks_exact(n.max(1)).map(|row| dot(row, w)).collect();
    let var = dot(w, &sw);
    if !(var > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let s = (dot(w, mu1) - b) / var.sqrt();
    Ok(gamma_from_s(s, family, floor))
}

/// Recovers `γ` from the normalised margin `s`, clipping into `(0, 1)`.
pub fn gamma_from_s<T: Scalar>(s: T, family: DistributionFamily, floor: T) -> WorstCaseAccuracy<T> {
    let (gamma, out_of_range) = match phi_inverse(s, family) {
        Some(g) if g <= T::zero() => (floor, true),
        Some(g) if g >= T::one() => (T::one() - T::epsilon(), true),
        Some(g) => (g, false),
        None => (floor, true),
    };
    WorstCaseAccuracy { gamma, family, s, out_of_range }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct QqPlot<T> {
    /// `(theoretical quantile, sorted sample)` pairs.
    pub pairs: Vec<(T, T)>,
    /// Pearson correlation of the pairs; 1 for perfectly normal samples.
    pub correlation: T,
}

/// Normal probability plot with plotting positions `(i − 0.5)/n`.
pub fn normality_qq<T: Scalar>(margins: &[T]) -> Result<QqPlot<T>> {
    let n = margins.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("normality check needs >= 3 samples, got {n}")));
    }
    if margins.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("margins must be finite".into()));
    }
    let mut sorted = margins.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let theory: Vec<T> = (0..n)
        .map(|i| T::lit(normal_quantile((i as f64 + 0.5) / n as f64)))
        .collect();
    let mean = |v: &[T]| v.iter().copied().sum::<T>() / T::from_count(n);
    let (mt, ms) = (mean(&theory), mean(&sorted));
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in theory.iter().zip(&sorted) {
        sxy = sxy + (x - mt) * (y - ms);
        sxx = sxx + (x - mt) * (x - mt);
        syy = syy + (y - ms) * (y - ms);
    }
    if !(syy > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let correlation = (sxy / (sxx * syy).sqrt()).min(T::one());
    Ok(QqPlot { pairs: theory.into_iter().zip(sorted).collect(), correlation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Diagonality<T> {
    pub mean_abs_diag: T,
    pub mean_abs_offdiag: T,
    /// `mean_abs_diag / mean_abs_offdiag`; infinite when the off-diagonal vanishes.
    pub ratio: T,
}

/// How close the covariance of weak-learner outputs is to diagonal.
pub fn covariance_diagonality<T: Scalar, R: AsRef<[T]>>(h_outputs: &[R]) -> Result<Diagonality<T>> {
    let m = h_outputs.len();
    let n = h_outputs.first().map_or(0, |r| r.as_ref().len());
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2x2 outputs, got {m}x{n}")));
    }
    if h_outputs.iter().any(|r| r.as_ref().len() != n) {
        return Err(Error::InvalidArgument("output rows differ in length".into()));
    }
    let cov = covariance(h_outputs);
    let mut diag = T::zero();
    let mut off = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                diag = diag + cov[i * n + j].abs();
            } else {
                off = off + cov[i * n + j].abs();
            }
        }
    }
    let mean_abs_diag = diag / T::from_count(n);
    let mean_abs_offdiag = off / T::from_count(n * (n - 1));
    if !(mean_abs_diag > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    let ratio = if mean_abs_offdiag > T::zero() { mean_abs_diag / mean_abs_offdiag } else { T::infinity() };
    Ok(Diagonality { mean_abs_diag, mean_abs_offdiag, ratio })
}
