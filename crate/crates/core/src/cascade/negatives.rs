use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weak::{GrayImage, HaarFeatureSet, IntegralImage};

/// Supplier of negative feature rows for bootstrapping.
pub trait NegativeSource<T> {
    fn n_features(&self) -> usize;

    /// Up to `n` rows for which `accept` holds. Returns fewer when the source
    /// runs dry or its per-call draw budget is spent.
    fn draw(&mut self, n: usize, accept: &mut dyn FnMut(&[T]) -> bool) -> Result<Vec<Vec<T>>>;

    /// Candidates examined so far, accepted or not.
    fn consumed(&self) -> usize;
}

/// Background distribution for synthetic negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Background<T> {
    Gaussian { mean: Vec<T>, std: Vec<T> },
    Uniform { low: Vec<T>, high: Vec<T> },
}

impl<T: Scalar> Background<T> {
    fn dims(&self) -> usize {
        match self {
            Background::Gaussian { mean, .. } => mean.len(),
            Background::Uniform { low, .. } => low.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Background::Gaussian { mean, std } => {
                mean.len() == std.len() && std.iter().all(|&s| s >= T::zero() && s.is_finite())
            }
            Background::Uniform { low, high } => low.len() == high.len() && low.iter().zip(high).all(|(&l, &h)| l <= h),
        };
        if !ok || self.dims() == 0 {
            return Err(Error::InvalidArgument("malformed background distribution".into()));
        }
        Ok(())
    }
}

/// Endless negatives drawn from a seeded background distribution.
#[derive(Debug, Clone)]
pub struct SyntheticNegatives<T> {
    background: Background<T>,
    rng: ChaCha8Rng,
    max_draws_per_call: usize,
    consumed: usize,
}

impl<T: Scalar> SyntheticNegatives<T> {
    pub fn new(background: Background<T>, seed: u64) -> Result<Self> {
        background.validate()?;
        Ok(Self { background, rng: ChaCha8Rng::seed_from_u64(seed), max_draws_per_call: 1_000_000, consumed: 0 })
    }

    pub fn with_max_draws(mut self, max_draws_per_call: usize) -> Self {
        self.max_draws_per_call = max_draws_per_call;
        self
    }

    fn sample(&mut self) -> Vec<T> {
        match &self.background {
            Background::Gaussian { mean, std } => mean
                .iter()
                .zip(std)
                .map(|(&m, &s)| {
                    let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut self.rng);
                    m + s * T::lit(z)
                })
                .collect(),
            Background::Uniform { low, high } => low
                .iter()
                .zip(high)
                .map(|(&l, &h)| l + (h - l) * T::lit(self.rng.random::<f64>()))
                .collect(),
        }
    }
}

impl<T: Scalar> NegativeSource<T> for SyntheticNegatives<T> {
    fn n_features(&self) -> usize {
        self.background.dims()
    }

    fn draw(&mut self, n: usize, accept: &mut dyn FnMut(&[T]) -> bool) -> Result<Vec<Vec<T>>> {
        let mut out = Vec::with_capacity(n);
        let mut tries = 0;
        while out.len() < n && tries < self.max_draws_per_call {
            let row = self.sample();
            tries += 1;
            self.consumed += 1;
            if accept(&row) {
                out.push(row);
            }
        }
        Ok(out)
    }

    fn consumed(&self) -> usize {
        self.consumed
    }
}

/// A finite list of negatives, scanned once in order.
#[derive(Debug, Clone)]
pub struct DatasetNegatives<T> {
    rows: Vec<Vec<T>>,
    next: usize,
}

impl<T: Scalar> DatasetNegatives<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("negative rows must be non-empty and equally long".into()));
        }
        Ok(Self { rows, next: 0 })
    }

    pub fn remaining(&self) -> usize {
        self.rows.len() - self.next
    }
}

impl<T: Scalar> NegativeSource<T> for DatasetNegatives<T> {
    fn n_features(&self) -> usize {
        self.rows[0].len()
    }

    fn draw(&mut self, n: usize, accept: &mut dyn FnMut(&[T]) -> bool) -> Result<Vec<Vec<T>>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n && self.next < self.rows.len() {
            let row = &self.rows[self.next];
            self.next += 1;
            if accept(row) {
                out.push(row.clone());
            }
        }
        Ok(out)
    }

    fn consumed(&self) -> usize {
        self.next
    }
}

/// Random windows cropped from background images, described by their Haar
/// responses.
#[derive(Debug, Clone)]
pub struct ImageNegatives<T> {
    images: Vec<IntegralImage<T>>,
    features: HaarFeatureSet,
    rng: ChaCha8Rng,
    max_draws_per_call: usize,
    consumed: usize,
}

impl<T: Scalar> ImageNegatives<T> {
    pub fn new(images: &[GrayImage<T>], features: HaarFeatureSet, seed: u64) -> Result<Self> {
        let (ww, wh) = (features.window_width, features.window_height);
        let images: Vec<IntegralImage<T>> = images
            .iter()
            .filter(|img| img.width >= ww && img.height >= wh)
            .map(GrayImage::integral)
            .collect();
        if images.is_empty() {
            return Err(Error::InvalidArgument(format!("no background image holds a {ww}x{wh} window")));
        }
        Ok(Self { images, features, rng: ChaCha8Rng::seed_from_u64(seed), max_draws_per_call: 1_000_000, consumed: 0 })
    }

    pub fn with_max_draws(mut self, max_draws_per_call: usize) -> Self {
        self.max_draws_per_call = max_draws_per_call;
        self
    }
}

impl<T: Scalar> NegativeSource<T> for ImageNegatives<T> {
    fn n_features(&self) -> usize {
        self.features.len()
    }

    fn draw(&mut self, n: usize, accept: &mut dyn FnMut(&[T]) -> bool) -> Result<Vec<Vec<T>>> {
        let (ww, wh) = (self.features.window_width, self.features.window_height);
        let mut out = Vec::with_capacity(n);
        let mut tries = 0;
        while out.len() < n && tries < self.max_draws_per_call {
            let img = &self.images[self.rng.random_range(0..self.images.len())];
            let ox = self.rng.random_range(0..=img.width() - ww);
            let oy = self.rng.random_range(0..=img.height() - wh);
            let row = self.features.responses_at(img, ox, oy)?;
            tries += 1;
            self.consumed += 1;
            if accept(&row) {
                out.push(row);
            }
        }
        Ok(out)
    }

    fn consumed(&self) -> usize {
        self.consumed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_draws_are_seeded() {
        let bg = Background::Uniform { low: vec![0.0f64, -1.0], high: vec![1.0, 1.0] };
        let mut a = SyntheticNegatives::new(bg.clone(), 3).unwrap();
        let mut b = SyntheticNegatives::new(bg, 3).unwrap();
        let ra = a.draw(5, &mut |_| true).unwrap();
        assert_eq!(ra, b.draw(5, &mut |_| true).unwrap());
        assert!(ra.iter().all(|r| (0.0..1.0).contains(&r[0]) && (-1.0..1.0).contains(&r[1])));
    }

    #[test]
    fn filter_and_budget() {
        let bg = Background::Gaussian { mean: vec![0.0f64], std: vec![1.0] };
        let mut s = SyntheticNegatives::new(bg, 1).unwrap().with_max_draws(50);
        let got = s.draw(10, &mut |r| r[0] > 0.0).unwrap();
        assert!(got.iter().all(|r| r[0] > 0.0));
        let none = s.draw(10, &mut |_| false).unwrap();
        assert!(none.is_empty());
        assert!(s.consumed() >= 50);
    }

    #[test]
    fn dataset_source_runs_dry() {
        let mut s = DatasetNegatives::new(vec![vec![1.0f64], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(s.draw(2, &mut |r| r[0] != 1.0).unwrap(), vec![vec![2.0], vec![3.0]]);
        assert!(s.draw(1, &mut |_| true).unwrap().is_empty());
        assert_eq!(s.remaining(), 0);
    }
}
