//! Multi-exit cascades: rate bookkeeping, the model, evaluation and training
//! with negative bootstrapping.

mod negatives;
mod train;

pub use negatives::{Background, DatasetNegatives, ImageNegatives, NegativeSource, SyntheticNegatives};
pub use train::{
    default_exit_schedule, train_cascade, BootstrapBatch, CascadeConfig, CascadeOutcome, CascadeReport, CascadeStop,
    NodeReport,
};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::StrongClassifier;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::scalar::Scalar;
use crate::weak::{DecisionStump, WeakClassifier};

/// Per-node goals `(d_min, f_max)` and the overall false-positive target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NodeTargets<T> {
    pub d_min: T,
    pub f_max: T,
    pub f_target: T,
}

impl<T: Scalar> Default for NodeTargets<T> {
    fn default() -> Self {
        Self { d_min: T::lit(0.997), f_max: T::lit(0.5), f_target: T::lit(1e-6) }
    }
}

impl<T: Scalar> NodeTargets<T> {
    pub fn new(d_min: T, f_max: T, f_target: T) -> Result<Self> {
        let t = Self { d_min, f_max, f_target };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let (zero, one) = (T::zero(), T::one());
        if !(self.d_min > zero && self.d_min <= one) {
            return Err(Error::InvalidArgument(format!("d_min must be in (0, 1], got {}", self.d_min)));
        }
        if !(self.f_max > zero && self.f_max < one) {
            return Err(Error::InvalidArgument(format!("f_max must be in (0, 1), got {}", self.f_max)));
        }
        if !(self.f_target > zero && self.f_target < one) {
            return Err(Error::InvalidArgument(format!("overall fp target must be in (0, 1), got {}", self.f_target)));
        }
        Ok(())
    }
}

/// Overall `(detection, false positive)` rates of a cascade: the products
/// of the per-node rates.
pub fn compose_rates<T: Scalar>(d: &[T], f: &[T]) -> Result<(T, T)> {
    if d.is_empty() || f.is_empty() {
        return Err(Error::InvalidArgument("rate vectors must be non-empty".into()));
    }
    if d.len() != f.len() {
        return Err(Error::DimensionMismatch { expected: d.len(), got: f.len() });
    }
    if d.iter().chain(f).any(|&v| !(v > T::zero() && v <= T::one())) {
        return Err(Error::InvalidArgument("rates must lie in (0, 1]".into()));
    }
    Ok((d.iter().fold(T::one(), |a, &v| a * v), f.iter().fold(T::one(), |a, &v| a * v)))
}

/// One exit: coefficients over `classifiers[first..n_t]` and an offset.
/// In a multi-exit cascade `first` is always 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Exit<T> {
    pub n_t: usize,
    #[serde(default)]
    pub first: usize,
    pub w: Vec<T>,
    pub b: T,
}

impl<T: Scalar> Exit<T> {
    fn score(&self, classifiers: &[DecisionStump<T>], row: &[T]) -> T {
        classifiers[self.first..self.n_t]
            .iter()
            .zip(&self.w)
            .map(|(h, &w)| if h.classify(row) > 0 { w } else { -w })
            .sum()
    }
}

/// Outcome of pushing one example through the cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CascadeTrace {
    pub accepted: bool,
    /// Number of exits actually evaluated (rejection stops evaluation).
    pub exits_evaluated: usize,
    pub rejected_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CascadeModel<T> {
    pub kind: String,
    pub exits: Vec<Exit<T>>,
    pub classifiers: Vec<DecisionStump<T>>,
    /// First node (1-based) trained with the configured asymmetric objective.
    pub lac_start_node: usize,
    pub targets: NodeTargets<T>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl<T: Scalar> CascadeModel<T> {
    pub const KIND: &'static str = "cascade";

    pub fn new(classifiers: Vec<DecisionStump<T>>, exits: Vec<Exit<T>>, lac_start_node: usize, targets: NodeTargets<T>) -> Result<Self> {
        let model = Self {
            kind: Self::KIND.to_string(),
            exits,
            classifiers,
            lac_start_node,
            targets,
            metadata: serde_json::Value::Null,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev = 0;
        for (t, e) in self.exits.iter().enumerate() {
            if e.n_t < prev || e.n_t > self.classifiers.len() || e.first > e.n_t {
                return Err(Error::InvalidArgument(format!("exit {t} has inconsistent classifier range")));
            }
            if e.w.len() != e.n_t - e.first {
                return Err(Error::DimensionMismatch { expected: e.n_t - e.first, got: e.w.len() });
            }
            prev = e.n_t;
        }
        Ok(())
    }

    pub fn n_exits(&self) -> usize {
        self.exits.len()
    }

    /// Exit `t` as a standalone strong classifier.
    pub fn exit_classifier(&self, t: usize) -> Result<StrongClassifier<T>> {
        let e = self.exits.get(t).ok_or_else(|| Error::OutOfBounds(format!("exit {t} of {}", self.exits.len())))?;
        StrongClassifier::new(self.classifiers[e.first..e.n_t].to_vec(), e.w.clone(), e.b)
    }

    pub fn exit_score(&self, t: usize, row: &[T]) -> T {
        self.exits[t].score(&self.classifiers, row)
    }

    pub fn classify_traced(&self, row: &[T]) -> CascadeTrace {
        for (t, e) in self.exits.iter().enumerate() {
            if e.score(&self.classifiers, row) < e.b {
                return CascadeTrace { accepted: false, exits_evaluated: t + 1, rejected_at: Some(t) };
            }
        }
        CascadeTrace { accepted: true, exits_evaluated: self.exits.len(), rejected_at: None }
    }

    /// Accepted iff every exit accepts.
    pub fn accepts(&self, row: &[T]) -> bool {
        self.classify_traced(row).accepted
    }

    /// `(detection rate, false-positive rate)` of the whole cascade.
    pub fn rates(&self, data: &Dataset<T>) -> (T, T) {
        let acc: Vec<bool> = (0..data.m()).into_par_iter().map(|i| self.accepts(data.row(i))).collect();
        let tp = acc[..data.m1()].iter().filter(|&&a| a).count();
        let fp = acc[data.m1()..].iter().filter(|&&a| a).count();
        (T::from_count(tp) / T::from_count(data.m1()), T::from_count(fp) / T::from_count(data.m2()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: Self = read_json(path)?;
        if model.kind != Self::KIND {
            return Err(Error::InvalidArgument(format!("expected a '{}' model, found '{}'", Self::KIND, model.kind)));
        }
        model.validate()?;
        Ok(model)
    }
}

/// Detection and false-positive rate of a single exit on `data`.
pub fn evaluate_node<T: Scalar>(exit: &StrongClassifier<T>, data: &Dataset<T>) -> (T, T) {
    exit.rates(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RocPoint<T> {
    pub offset: T,
    pub fp_count: usize,
    pub detection_rate: T,
}

/// Cascade ROC obtained by sweeping the offset of the final exit while the
/// earlier exits stay fixed. Sorted by `fp_count`, then detection rate.
pub fn evaluate_cascade_roc<T: Scalar>(model: &CascadeModel<T>, data: &Dataset<T>, sweep: &[T]) -> Result<Vec<RocPoint<T>>> {
    let last = model.exits.len().checked_sub(1).ok_or_else(|| Error::InvalidArgument("cascade has no exits".into()))?;
    if sweep.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("sweep offsets must not be NaN".into()));
    }
    // score at the final exit for examples that survive every earlier exit
    let survivors: Vec<Option<T>> = (0..data.m())
        .into_par_iter()
        .map(|i| {
            let row = data.row(i);
            let passes = model.exits[..last].iter().all(|e| e.score(&model.classifiers, row) >= e.b);
            passes.then(|| model.exit_score(last, row))
        })
        .collect();
    let mut points: Vec<RocPoint<T>> = sweep
        .iter()
        .map(|&b| {
            let accepted = |range: std::ops::Range<usize>| survivors[range].iter().filter(|s| matches!(s, Some(v) if *v >= b)).count();
            RocPoint {
                offset: b,
                fp_count: accepted(data.m1()..data.m()),
                detection_rate: T::from_count(accepted(0..data.m1())) / T::from_count(data.m1()),
            }
        })
        .collect();
    points.sort_by(|a, b| {
        a.fp_count
            .cmp(&b.fp_count)
            .then(a.detection_rate.partial_cmp(&b.detection_rate).expect("finite rates"))
    });
    Ok(points)
}
