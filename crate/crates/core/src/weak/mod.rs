//! Weak learners: decision stumps over tabular columns and Haar-like
//! responses computed on integral images.

mod haar;
mod image;
mod integral;
mod pool;
mod stump;

pub use haar::{HaarFeature, HaarFeatureSet, HaarKind};
pub use image::{load_window, read_csv_grid, read_pgm, GrayImage};
pub use integral::IntegralImage;
pub use pool::{FeatureSource, WeakLearnerPool, DEFAULT_SAMPLE_FRACTION, DEFAULT_SEED};
pub use stump::{best_stump, best_stump_over, DecisionStump, StumpChoice};

/// A binary weak classifier `h(x) ∈ {+1, -1}`.
pub trait WeakClassifier<T> {
    fn classify(&self, row: &[T]) -> i8;
}

impl<T, H: WeakClassifier<T> + ?Sized> WeakClassifier<T> for &H {
    fn classify(&self, row: &[T]) -> i8 {
        (**self).classify(row)
    }
}
