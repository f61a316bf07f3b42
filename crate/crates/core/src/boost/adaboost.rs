use serde::{Deserialize, Serialize};

use super::StrongClassifier;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weak::{best_stump, WeakClassifier, WeakLearnerPool};

/// Coefficient used for a weak learner with zero weighted error: `½ ln(10¹⁰)`.
pub const ADABOOST_ALPHA_CAP: f64 = 11.512_925_464_970_229;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AdaBoostOutcome<T> {
    /// Coefficients normalised onto the simplex, offset 0.
    pub classifier: StrongClassifier<T>,
    /// Raw coefficients `½ ln((1 − err)/err)`.
    pub alphas: Vec<T>,
    pub weighted_errors: Vec<T>,
    /// Training error of the ensemble after each round.
    pub training_errors: Vec<T>,
    pub stopped_early: bool,
}

/// Discrete AdaBoost over decision stumps.
pub fn adaboost_train<T: Scalar>(
    data: &Dataset<T>,
    pool: &mut WeakLearnerPool,
    rounds: usize,
) -> Result<AdaBoostOutcome<T>> {
    if rounds == 0 {
        return Err(Error::InvalidArgument("rounds must be >= 1".into()));
    }
    let m = data.m();
    let mut d = vec![T::one() / T::from_count(m); m];
    let mut stumps = Vec::new();
    let mut alphas = Vec::new();
    let mut weighted_errors = Vec::new();
    let mut training_errors = Vec::new();
    let mut scores = vec![T::zero(); m];
    let half = T::lit(0.5);
    let cap = T::lit(ADABOOST_ALPHA_CAP);
    let mut stopped_early = false;

    for _ in 0..rounds {
        let choice = best_stump(pool, data, &d)?;
        let err = ((T::one() - choice.edge) * half).max(T::zero());
        if err >= half {
            stopped_early = true;
            break;
        }
        let alpha = if err > T::zero() { (half * ((T::one() - err) / err).ln()).min(cap) } else { cap };
        let h: Vec<i8> = (0..m).map(|i| choice.stump.classify(data.row(i))).collect();
        for i in 0..m {
            let yh = T::from_i8(data.label(i).sign() * h[i]).unwrap();
            d[i] = d[i] * (-alpha * yh).exp();
            scores[i] = scores[i] + alpha * T::from_i8(h[i]).unwrap();
        }
        let z: T = d.iter().copied().sum();
        d.iter_mut().for_each(|v| *v = *v / z);
        stumps.push(choice.stump);
        alphas.push(alpha);
        weighted_errors.push(err);
        let wrong = (0..m)
            .filter(|&i| (scores[i] >= T::zero()) != (data.label(i).sign() > 0))
            .count();
        training_errors.push(T::from_count(wrong) / T::from_count(m));
    }
    if stumps.is_empty() {
        return Err(Error::NoWeakClassifiers);
    }
    let total: T = alphas.iter().copied().sum();
    let w = alphas.iter().map(|&a| a / total).collect();
    Ok(AdaBoostOutcome {
        classifier: StrongClassifier::new(stumps, w, T::zero())?,
        alphas,
        weighted_errors,
        training_errors,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;

    fn data(xs: &[f64], ys: &[i64]) -> Dataset<f64> {
        Dataset::from_rows(
            xs.iter().map(|&x| vec![x]).collect(),
            ys.iter().map(|&y| Label::from_sign(y).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_stump_gets_capped_coefficient() {
        let d = data(&[-2.0, -1.0, 1.0, 2.0], &[-1, -1, 1, 1]);
        let out = adaboost_train(&d, &mut WeakLearnerPool::exhaustive(1), 3).unwrap();
        assert_eq!(out.alphas[0], ADABOOST_ALPHA_CAP);
        assert_eq!(out.training_errors[0], 0.0);
        assert_eq!(out.classifier.training_error(&d), 0.0);
    }

    #[test]
    fn interval_target_improves_after_first_round() {
        // positives at both ends; no single stump is perfect
        let d = data(&[1.0, 2.0, 3.0, 4.0], &[1, -1, -1, 1]);
        let out = adaboost_train(&d, &mut WeakLearnerPool::exhaustive(1), 3).unwrap();
        assert!(out.training_errors[0] > 0.0);
        assert!(out.training_errors.last().unwrap() < &out.training_errors[0]);
    }

    #[test]
    fn normalisation_preserves_decisions() {
        let d = data(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], &[1, -1, 1, -1, 1, 1]);
        let out = adaboost_train(&d, &mut WeakLearnerPool::exhaustive(1), 4).unwrap();
        let total: f64 = out.alphas.iter().sum();
        for i in 0..d.m() {
            let raw: f64 = out
                .classifier
                .weak_classifiers
                .iter()
                .zip(&out.alphas)
                .map(|(h, a)| a * h.classify(d.row(i)) as f64)
                .sum();
            assert_eq!(raw >= 0.0, out.classifier.score(d.row(i)) >= 0.0 / total);
        }
        assert!((out.classifier.w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
