//! Seeded two-dimensional toy datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyKind {
    /// Overlapping Gaussian blobs; the positive blob is tighter.
    Gaussians2d,
    /// Classes split by `x0 = 0` with a gap of 1.
    Separable,
    /// Labels given by the sign of `x0 · x1`.
    Xor,
}

impl ToyKind {
    pub fn name(self) -> &'static str {
        match self {
            ToyKind::Gaussians2d => "gaussians2d",
            ToyKind::Separable => "separable",
            ToyKind::Xor => "xor",
        }
    }
}

pub fn generate<T: Scalar>(kind: ToyKind, n_pos: usize, n_neg: usize, seed: u64) -> Result<Dataset<T>> {
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidArgument("each class needs at least one example".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pos, neg) = match kind {
        ToyKind::Gaussians2d => {
            let pos = gaussian_blob(&mut rng, n_pos, [1.0, 1.0], 0.6);
            let neg = gaussian_blob(&mut rng, n_neg, [0.0, 0.0], 1.0);
            (pos, neg)
        }
        ToyKind::Separable => {
            let mut side = |n: usize, sign: f64| -> Vec<[f64; 2]> {
                (0..n)
                    .map(|_| [sign * rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0)])
                    .collect()
            };
            let pos = side(n_pos, 1.0);
            let neg = side(n_neg, -1.0);
            (pos, neg)
        }
        ToyKind::Xor => {
            let mut quadrant = |n: usize, same_sign: bool| -> Vec<[f64; 2]> {
                (0..n)
                    .map(|_| {
                        let sx = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        let sy = if same_sign { sx } else { -sx };
                        [sx * rng.random_range(0.2..1.2), sy * rng.random_range(0.2..1.2)]
                    })
                    .collect()
            };
            let pos = quadrant(n_pos, true);
            let neg = quadrant(n_neg, false);
            (pos, neg)
        }
    };
    let conv = |v: Vec<[f64; 2]>| -> Vec<Vec<T>> { v.into_iter().map(|p| vec![T::lit(p[0]), T::lit(p[1])]).collect() };
    Dataset::from_classes(&conv(pos), &conv(neg))
}

fn gaussian_blob(rng: &mut ChaCha8Rng, n: usize, mean: [f64; 2], std: f64) -> Vec<[f64; 2]> {
    let normal = Normal::new(0.0, std).expect("positive std");
    (0..n)
        .map(|_| [mean[0] + normal.sample(rng), mean[1] + normal.sample(rng)])
        .collect()
}
