use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Summed-area table with one leading row and column of zeros:
/// `at(x, y) = Σ_{i<x, j<y} pixel(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage<T> {
    width: usize,
    height: usize,
    table: Vec<T>,
}

impl<T: Scalar> IntegralImage<T> {
    /// `pixels` is row-major, `height` rows of `width` values.
    pub fn new(pixels: &[T], width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("image must be non-empty".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, got: pixels.len() });
        }
        let stride = width + 1;
        let mut table = vec![T::zero(); stride * (height + 1)];
        for y in 0..height {
            let mut row_sum = T::zero();
            for x in 0..width {
                row_sum = row_sum + pixels[y * width + x];
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
            }
        }
        Ok(Self { width, height, table })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        self.table[y * (self.width + 1) + x]
    }

    /// Sum over `[x, x + w) × [y, y + h)` with four lookups.
    #[inline]
    pub fn rect_sum(&self, x: usize, y: usize, w: usize, h: usize) -> T {
        self.at(x + w, y + h) + self.at(x, y) - self.at(x + w, y) - self.at(x, y + h)
    }

    pub fn checked_rect_sum(&self, x: usize, y: usize, w: usize, h: usize) -> Result<T> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::OutOfBounds(format!(
                "rectangle ({x},{y},{w},{h}) outside {}x{} image",
                self.width, self.height
            )));
        }
        Ok(self.rect_sum(x, y, w, h))
    }
}
