use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{WeakClassifier, WeakLearnerPool};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `h(x) = polarity · sign(x[feature_index] - threshold)` with `sign(0) = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump<T> {
    pub feature_index: usize,
    pub threshold: T,
    pub polarity: i8,
}

impl<T> DecisionStump<T> {
    pub fn new(feature_index: usize, threshold: T, polarity: i8) -> Self {
        assert!(polarity == 1 || polarity == -1, "polarity must be +1 or -1");
        Self { feature_index, threshold, polarity }
    }

    pub fn negated(self) -> Self {
        Self { polarity: -self.polarity, ..self }
    }
}

impl<T: Scalar> WeakClassifier<T> for DecisionStump<T> {
    #[inline]
    fn classify(&self, row: &[T]) -> i8 {
        if row[self.feature_index] >= self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

/// A stump together with its edge `Σ_i u_i y_i h(x_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpChoice<T> {
    pub stump: DecisionStump<T>,
    pub edge: T,
}

/// Best stump over the features the pool samples for this call.
pub fn best_stump<T: Scalar>(
    pool: &mut WeakLearnerPool,
    data: &Dataset<T>,
    u: &[T],
) -> Result<StumpChoice<T>> {
    if pool.n_features() != data.n_features() {
        return Err(Error::DimensionMismatch { expected: pool.n_features(), got: data.n_features() });
    }
    let features = pool.sample_features();
    best_stump_over(data, u, &features)
}

/// Exhaustive scan of midpoint thresholds (plus one sentinel on each side)
/// and both polarities over the listed features.
///
/// Weights may carry either sign; only their pairing with the labels matters.
pub fn best_stump_over<T: Scalar>(
    data: &Dataset<T>,
    u: &[T],
    features: &[usize],
) -> Result<StumpChoice<T>> {
    if u.len() != data.m() {
        return Err(Error::DimensionMismatch { expected: data.m(), got: u.len() });
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("example weights must be finite".into()));
    }
    if u.iter().all(|&v| v == T::zero()) {
        return Err(Error::ZeroWeights);
    }
    if features.is_empty() {
        return Err(Error::NoWeakClassifiers);
    }
    if let Some(&f) = features.iter().find(|&&f| f >= data.n_features()) {
        return Err(Error::OutOfBounds(format!("feature {f} of {}", data.n_features())));
    }
    // u_i y_i
    let signed: Vec<T> = u
        .iter()
        .enumerate()
        .map(|(i, &w)| w * data.label(i).as_scalar::<T>())
        .collect();
    let total: T = signed.iter().copied().sum();
    // warm the shared sort cache before going parallel
    let _ = data.sorted_order(0);

    let per_feature: Vec<StumpChoice<T>> = features
        .par_iter()
        .map(|&f| scan_feature(data, &signed, total, f))
        .collect();

    let mut best = per_feature[0];
    for c in &per_feature[1..] {
        if c.edge > best.edge
            || (c.edge == best.edge && c.stump.feature_index < best.stump.feature_index)
        {
            best = *c;
        }
    }
    Ok(best)
}

fn scan_feature<T: Scalar>(data: &Dataset<T>, signed: &[T], total: T, f: usize) -> StumpChoice<T> {
    let order = data.sorted_order(f);
    let value = |k: usize| data.value(order[k] as usize, f);
    let m = order.len();
    let two = T::lit(2.0);

    let mut best = StumpChoice { stump: DecisionStump::new(f, T::zero(), 1), edge: T::neg_infinity() };
    let mut consider = |threshold: T, edge_pos: T| {
        // threshold candidates arrive in ascending order; strict comparison
        // keeps the lowest threshold and polarity +1 on ties
        if edge_pos > best.edge {
            best = StumpChoice { stump: DecisionStump::new(f, threshold, 1), edge: edge_pos };
        }
        if -edge_pos > best.edge {
            best = StumpChoice { stump: DecisionStump::new(f, threshold, -1), edge: -edge_pos };
        }
    };

    let lo = value(0);
    consider(lo - lo.abs().max(T::one()), total);
    let mut below = T::zero();
    for k in 0..m - 1 {
        below = below + signed[order[k] as usize];
        let (a, b) = (value(k), value(k + 1));
        if a < b {
            let mut t = a + (b - a) / two;
            if t <= a {
                t = b;
            }
            consider(t, total - two * below);
        }
    }
    let hi = value(m - 1);
    consider(hi + hi.abs().max(T::one()), -total);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn one_d(xs: &[f64], ys: &[i64]) -> Dataset<f64> {
        Dataset::from_rows(
            xs.iter().map(|&x| vec![x]).collect(),
            ys.iter().map(|&y| Label::from_sign(y).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn separable_line() {
        let d = one_d(&[-2.0, -1.0, 1.0, 2.0], &[-1, -1, 1, 1]);
        let u = vec![0.25; 4];
        let c = best_stump_over(&d, &u, &[0]).unwrap();
        assert_eq!(c.stump, DecisionStump::new(0, 0.0, 1));
        assert!((c.edge - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_atom_weight() {
        let d = one_d(&[0.0, 1.0, 2.0, 3.0], &[1, -1, 1, -1]);
        // sorted rows: positives (0.0, 2.0) then negatives (1.0, 3.0); mass on x = 2.0
        let u = vec![0.0, 0.7, 0.0, 0.0];
        let c = best_stump_over(&d, &u, &[0]).unwrap();
        assert!((c.edge - 0.7).abs() < 1e-15);
        assert_eq!(c.stump.classify(&[2.0]), 1);
    }

    #[test]
    fn zero_weights_rejected() {
        let d = one_d(&[0.0, 1.0], &[1, -1]);
        assert!(matches!(best_stump_over(&d, &[0.0, 0.0], &[0]), Err(Error::ZeroWeights)));
    }

    #[test]
    fn duplicate_features_tie_to_lowest_index() {
        let d = Dataset::from_rows(
            vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![-1.0, -1.0]],
            vec![Label::Positive, Label::Positive, Label::Negative],
        )
        .unwrap();
        let c = best_stump_over(&d, &[1.0, 1.0, 1.0], &[1, 0]).unwrap();
        assert_eq!(c.stump.feature_index, 0);
    }

    #[test]
    fn adjacent_floats_threshold_stays_consistent() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let d = one_d(&[b, a], &[1, -1]);
        let c = best_stump_over(&d, &[1.0, 1.0], &[0]).unwrap();
        assert_eq!(c.edge, 2.0);
        assert_eq!(c.stump.classify(&[b]), 1);
        assert_eq!(c.stump.classify(&[a]), -1);
    }
}
