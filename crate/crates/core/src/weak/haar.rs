use serde::{Deserialize, Serialize};

use super::IntegralImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The five basic rectangle patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HaarKind {
    /// left minus right
    TwoHorizontal,
    /// top minus bottom
    TwoVertical,
    /// centre column minus the two outer columns
    ThreeHorizontal,
    /// centre row minus the two outer rows
    ThreeVertical,
    /// main diagonal pair minus anti-diagonal pair
    Four,
}

impl HaarKind {
    pub const ALL: [HaarKind; 5] = [
        HaarKind::TwoHorizontal,
        HaarKind::TwoVertical,
        HaarKind::ThreeHorizontal,
        HaarKind::ThreeVertical,
        HaarKind::Four,
    ];

    /// Number of unit cells along (x, y).
    pub fn cells(self) -> (usize, usize) {
        match self {
            HaarKind::TwoHorizontal => (2, 1),
            HaarKind::TwoVertical => (1, 2),
            HaarKind::ThreeHorizontal => (3, 1),
            HaarKind::ThreeVertical => (1, 3),
            HaarKind::Four => (2, 2),
        }
    }
}

/// A Haar-like feature placed at `(x, y)` inside a detection window; `width`
/// and `height` cover the whole pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaarFeature {
    pub kind: HaarKind,
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl HaarFeature {
    pub fn new(kind: HaarKind, x: usize, y: usize, width: usize, height: usize) -> Result<Self> {
        let (cx, cy) = kind.cells();
        if width == 0 || height == 0 || width % cx != 0 || height % cy != 0 {
            return Err(Error::InvalidArgument(format!(
                "{kind:?} needs a size divisible by {cx}x{cy}, got {width}x{height}"
            )));
        }
        Ok(Self { kind, x, y, width, height })
    }

    pub fn fits(&self, window_width: usize, window_height: usize) -> bool {
        self.x + self.width <= window_width && self.y + self.height <= window_height
    }

    /// Every placement of every kind inside a `width × height` window.
    pub fn enumerate(width: usize, height: usize) -> Vec<HaarFeature> {
        let mut out = Vec::new();
        for kind in HaarKind::ALL {
            let (cx, cy) = kind.cells();
            for uw in 1..=width / cx {
                for uh in 1..=height / cy {
                    let (w, h) = (uw * cx, uh * cy);
                    for y in 0..=height - h {
                        for x in 0..=width - w {
                            out.push(HaarFeature { kind, x, y, width: w, height: h });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn response<T: Scalar>(&self, img: &IntegralImage<T>) -> Result<T> {
        self.response_at(img, 0, 0)
    }

    /// Response with the window's top-left corner at `(ox, oy)` in `img`.
    pub fn response_at<T: Scalar>(&self, img: &IntegralImage<T>, ox: usize, oy: usize) -> Result<T> {
        if ox + self.x + self.width > img.width() || oy + self.y + self.height > img.height() {
            return Err(Error::OutOfBounds(format!(
                "{:?} at ({},{}) size {}x{} outside {}x{} image",
                self.kind,
                ox + self.x,
                oy + self.y,
                self.width,
                self.height,
                img.width(),
                img.height()
            )));
        }
        Ok(self.response_unchecked(img, ox, oy))
    }

    fn response_unchecked<T: Scalar>(&self, img: &IntegralImage<T>, ox: usize, oy: usize) -> T {
        let (x, y) = (ox + self.x, oy + self.y);
        let (cx, cy) = self.kind.cells();
        let (uw, uh) = (self.width / cx, self.height / cy);
        let s = |i: usize, j: usize| img.rect_sum(x + i * uw, y + j * uh, uw, uh);
        match self.kind {
            HaarKind::TwoHorizontal => s(0, 0) - s(1, 0),
            HaarKind::TwoVertical => s(0, 0) - s(0, 1),
            HaarKind::ThreeHorizontal => s(1, 0) - s(0, 0) - s(2, 0),
            HaarKind::ThreeVertical => s(0, 1) - s(0, 0) - s(0, 2),
            HaarKind::Four => s(0, 0) + s(1, 1) - s(1, 0) - s(0, 1),
        }
    }
}

/// An ordered list of Haar features for a fixed window size. Feature `j`
/// becomes tabular column `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaarFeatureSet {
    pub window_width: usize,
    pub window_height: usize,
    pub features: Vec<HaarFeature>,
}

impl HaarFeatureSet {
    pub fn new(window_width: usize, window_height: usize, features: Vec<HaarFeature>) -> Result<Self> {
        if let Some(f) = features.iter().find(|f| !f.fits(window_width, window_height)) {
            return Err(Error::OutOfBounds(format!(
                "{f:?} does not fit a {window_width}x{window_height} window"
            )));
        }
        Ok(Self { window_width, window_height, features })
    }

    pub fn full(window_width: usize, window_height: usize) -> Self {
        Self {
            window_width,
            window_height,
            features: HaarFeature::enumerate(window_width, window_height),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Feature row for the window at `(ox, oy)` of `img`.
    pub fn responses_at<T: Scalar>(&self, img: &IntegralImage<T>, ox: usize, oy: usize) -> Result<Vec<T>> {
        if ox + self.window_width > img.width() || oy + self.window_height > img.height() {
            return Err(Error::OutOfBounds(format!(
                "window at ({ox},{oy}) outside {}x{} image",
                img.width(),
                img.height()
            )));
        }
        Ok(self.features.iter().map(|f| f.response_unchecked(img, ox, oy)).collect())
    }

    pub fn responses<T: Scalar>(&self, img: &IntegralImage<T>) -> Result<Vec<T>> {
        self.responses_at(img, 0, 0)
    }
}
