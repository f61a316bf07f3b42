use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::scalar::Scalar;
use crate::weak::{DecisionStump, WeakClassifier};

/// `F(x) = Σ_j w_j h_j(x) − b`; an example is accepted when `F(x) ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct StrongClassifier<T> {
    pub weak_classifiers: Vec<DecisionStump<T>>,
    pub w: Vec<T>,
    pub b: T,
}

impl<T: Scalar> StrongClassifier<T> {
    pub fn new(weak_classifiers: Vec<DecisionStump<T>>, w: Vec<T>, b: T) -> Result<Self> {
        if weak_classifiers.len() != w.len() {
            return Err(Error::DimensionMismatch { expected: weak_classifiers.len(), got: w.len() });
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("coefficients and offset must be finite".into()));
        }
        Ok(Self { weak_classifiers, w, b })
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `Σ_j w_j h_j(x)`, without the offset.
    pub fn score(&self, row: &[T]) -> T {
        self.weak_classifiers
            .iter()
            .zip(&self.w)
            .map(|(h, &w)| if h.classify(row) > 0 { w } else { -w })
            .sum()
    }

    pub fn scores(&self, data: &Dataset<T>) -> Vec<T> {
        (0..data.m()).into_par_iter().map(|i| self.score(data.row(i))).collect()
    }

    pub fn accepts(&self, row: &[T]) -> bool {
        self.score(row) >= self.b
    }

    pub fn classify(&self, row: &[T]) -> Label {
        if self.accepts(row) {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// `(detection rate, false-positive rate)` on `data`.
    pub fn rates(&self, data: &Dataset<T>) -> (T, T) {
        let accepted: Vec<bool> = (0..data.m()).into_par_iter().map(|i| self.accepts(data.row(i))).collect();
        let tp = accepted[..data.m1()].iter().filter(|&&a| a).count();
        let fp = accepted[data.m1()..].iter().filter(|&&a| a).count();
        (T::from_count(tp) / T::from_count(data.m1()), T::from_count(fp) / T::from_count(data.m2()))
    }

    pub fn training_error(&self, data: &Dataset<T>) -> T {
        let wrong = (0..data.m()).filter(|&i| self.classify(data.row(i)) != data.label(i)).count();
        T::from_count(wrong) / T::from_count(data.m())
    }
}

/// On-disk form of a trained strong classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelFile<T> {
    pub kind: String,
    pub mode: String,
    pub theta: T,
    pub weak_classifiers: Vec<DecisionStump<T>>,
    pub w: Vec<T>,
    pub b: T,
    /// Free-form provenance: configuration, seed, training metrics.
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl<T: Scalar> ModelFile<T> {
    pub const KIND: &'static str = "strong";

    pub fn new(classifier: &StrongClassifier<T>, mode: &str, theta: T, metadata: serde_json::Value) -> Self {
        Self {
            kind: Self::KIND.to_string(),
            mode: mode.to_string(),
            theta,
            weak_classifiers: classifier.weak_classifiers.clone(),
            w: classifier.w.clone(),
            b: classifier.b,
            metadata,
        }
    }

    pub fn classifier(&self) -> Result<StrongClassifier<T>> {
        StrongClassifier::new(self.weak_classifiers.clone(), self.w.clone(), self.b)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: Self = read_json(path)?;
        if model.kind != Self::KIND {
            return Err(Error::InvalidArgument(format!("expected a '{}' model, found '{}'", Self::KIND, model.kind)));
        }
        model.classifier()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> StrongClassifier<f64> {
        StrongClassifier::new(
            vec![DecisionStump::new(0, 0.0, 1), DecisionStump::new(1, 0.5, -1)],
            vec![0.75, 0.25],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn score_and_decision() {
        let s = toy();
        assert_eq!(s.score(&[1.0, 0.0]), 1.0);
        assert_eq!(s.score(&[-1.0, 1.0]), -1.0);
        assert_eq!(s.score(&[1.0, 1.0]), 0.5);
        assert!(s.accepts(&[1.0, 1.0]));
        assert!(!s.accepts(&[-1.0, 0.0]));
    }

    #[test]
    fn model_file_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        let mut s = toy();
        s.w = vec![0.1 + 0.2, 1.0 - (0.1 + 0.2)];
        s.b = std::f64::consts::PI / 7.0;
        let m = ModelFile::new(&s, "FisherBoost", 0.05, serde_json::json!({"seed": 7}));
        m.save(&p1).unwrap();
        let loaded = ModelFile::<f64>::load(&p1).unwrap();
        assert_eq!(loaded, m);
        loaded.save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(StrongClassifier::new(vec![DecisionStump::new(0, 0.0f64, 1)], vec![], 0.0).is_err());
    }
}
