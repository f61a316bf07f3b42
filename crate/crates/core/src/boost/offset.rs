use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// What the offset `b` of `sign(score − b)` should achieve on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OffsetTarget<T> {
    /// Minimise the class-balanced error `(1 − detection) + fp_rate`, so
    /// each class counts equally whatever its size.
    Balanced,
    /// Minimise the number of misclassified examples.
    MinError,
    /// Largest `b` whose detection rate is at least the given value.
    MinDetection(T),
    /// Lowest `b` whose false-positive rate does not exceed `max_fp`, moved one
    /// candidate further down if detection is still below `min_detection`.
    MaxFp { max_fp: T, min_detection: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OffsetFlag {
    Ok,
    /// Every score is identical; there is no gap to place `b` in.
    Degenerate,
    /// No candidate satisfies the target; the extreme candidate is returned.
    Unreachable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offset<T> {
    pub b: T,
    pub flag: OffsetFlag,
    pub detection_rate: T,
    pub fp_rate: T,
}

fn midpoint<T: Scalar>(a: T, b: T) -> T {
    let t = a + (b - a) / T::lit(2.0);
    if t <= a {
        b
    } else {
        t
    }
}

/// Picks `b` among the midpoints of consecutive distinct scores plus one
/// sentinel on each side (half the outermost gap beyond the extreme score).
/// An example is accepted when `score ≥ b`.
pub fn find_offset<T: Scalar>(scores: &[T], labels: &[Label], target: OffsetTarget<T>) -> Result<Offset<T>> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: scores.len(), got: labels.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let mut pos: Vec<T> = Vec::new();
    let mut neg: Vec<T> = Vec::new();
    for (&s, &l) in scores.iter().zip(labels) {
        match l {
            Label::Positive => pos.push(s),
            Label::Negative => neg.push(s),
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidArgument("offset search needs both classes".into()));
    }
    let cmp = |a: &T, b: &T| a.partial_cmp(b).expect("finite");
    pos.sort_by(cmp);
    neg.sort_by(cmp);
    let mut distinct: Vec<T> = scores.to_vec();
    distinct.sort_by(cmp);
    distinct.dedup();

    let rates = |b: T| -> (T, T) {
        let det = pos.len() - pos.partition_point(|&s| s < b);
        let fp = neg.len() - neg.partition_point(|&s| s < b);
        (
            T::from_count(det) / T::from_count(pos.len()),
            T::from_count(fp) / T::from_count(neg.len()),
        )
    };
    let finish = |b: T, flag: OffsetFlag| {
        let (detection_rate, fp_rate) = rates(b);
        Offset { b, flag, detection_rate, fp_rate }
    };

    if distinct.len() == 1 {
        return Ok(finish(distinct[0], OffsetFlag::Degenerate));
    }
    let k = distinct.len();
    let mut cands = Vec::with_capacity(k + 1);
    cands.push(distinct[0] - (distinct[1] - distinct[0]) / T::lit(2.0));
    for i in 0..k - 1 {
        cands.push(midpoint(distinct[i], distinct[i + 1]));
    }
    cands.push(distinct[k - 1] + (distinct[k - 1] - distinct[k - 2]) / T::lit(2.0));

    let m1 = T::from_count(pos.len());
    let m2 = T::from_count(neg.len());
    let argmin = |cost: &dyn Fn(T, T) -> T| {
        let mut best = (cands[0], T::infinity());
        for &b in &cands {
            let (det, fp) = rates(b);
            let c = cost(det, fp);
            if c < best.1 {
                best = (b, c);
            }
        }
        best.0
    };
    Ok(match target {
        OffsetTarget::Balanced => finish(argmin(&|det, fp| (T::one() - det) + fp), OffsetFlag::Ok),
        OffsetTarget::MinError => finish(argmin(&|det, fp| (T::one() - det) * m1 + fp * m2), OffsetFlag::Ok),
        OffsetTarget::MinDetection(d) => match cands.iter().rev().find(|&&b| rates(b).0 >= d) {
            Some(&b) => finish(b, OffsetFlag::Ok),
            None => finish(cands[0], OffsetFlag::Unreachable),
        },
        OffsetTarget::MaxFp { max_fp, min_detection } => {
            match cands.iter().position(|&b| rates(b).1 <= max_fp) {
                Some(i) => {
                    let i = if rates(cands[i]).0 < min_detection && i > 0 { i - 1 } else { i };
                    finish(cands[i], OffsetFlag::Ok)
                }
                None => finish(cands[k], OffsetFlag::Unreachable),
            }
        }
    })
}
