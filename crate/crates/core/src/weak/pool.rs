use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HaarFeatureSet;
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 0x5eed_1a_c0;

/// Where the feature columns scanned by the stump learner come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FeatureSource {
    Tabular { n_features: usize },
    /// Column `j` holds the response of `features.features[j]` on each window.
    Haar(HaarFeatureSet),
}

impl FeatureSource {
    pub fn n_features(&self) -> usize {
        match self {
            FeatureSource::Tabular { n_features } => *n_features,
            FeatureSource::Haar(set) => set.len(),
        }
    }
}

/// Candidate weak classifiers: stumps over a uniformly subsampled set of
/// feature columns, redrawn on every call.
#[derive(Debug, Clone)]
pub struct WeakLearnerPool {
    source: FeatureSource,
    sample_fraction: f64,
    seed: u64,
    rng: ChaCha8Rng,
}

impl WeakLearnerPool {
    pub fn new(source: FeatureSource, sample_fraction: f64, seed: u64) -> Result<Self> {
        if !(sample_fraction > 0.0 && sample_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sample fraction must be in (0, 1], got {sample_fraction}"
            )));
        }
        if source.n_features() == 0 {
            return Err(Error::InvalidArgument("feature source is empty".into()));
        }
        Ok(Self { source, sample_fraction, seed, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    /// Every column on every call.
    pub fn exhaustive(n_features: usize) -> Self {
        Self::new(FeatureSource::Tabular { n_features }, 1.0, DEFAULT_SEED)
            .expect("valid exhaustive pool")
    }

    pub fn tabular(n_features: usize, sample_fraction: f64, seed: u64) -> Result<Self> {
        Self::new(FeatureSource::Tabular { n_features }, sample_fraction, seed)
    }

    pub fn source(&self) -> &FeatureSource {
        &self.source
    }

    pub fn n_features(&self) -> usize {
        self.source.n_features()
    }

    pub fn sample_fraction(&self) -> f64 {
        self.sample_fraction
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_exhaustive(&self) -> bool {
        self.sample_fraction >= 1.0
    }

    /// Sorted feature indices for one weak-learner search, drawn uniformly
    /// without replacement.
    pub fn sample_features(&mut self) -> Vec<usize> {
        let n = self.n_features();
        if self.is_exhaustive() {
            return (0..n).collect();
        }
        let k = ((self.sample_fraction * n as f64).ceil() as usize).clamp(1, n);
        let mut picked = index::sample(&mut self.rng, n, k).into_vec();
        picked.sort_unstable();
        picked
    }
}
