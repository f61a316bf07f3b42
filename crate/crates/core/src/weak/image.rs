use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::IntegralImage;

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<T>,
}

impl<T: Scalar> GrayImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{width}x{height} image with {} pixels",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn integral(&self) -> IntegralImage<T> {
        IntegralImage::new(&self.pixels, self.width, self.height).expect("validated dimensions")
    }
}

/// Reads a binary (P5) or ASCII (P2) PGM file.
pub fn read_pgm<T: Scalar>(path: impl AsRef<Path>) -> Result<GrayImage<T>> {
    let img = image::open(path.as_ref()).map_err(|e| Error::Image(e.to_string()))?;
    let luma = img.to_luma16();
    let (w, h) = luma.dimensions();
    // to_luma16 rescales 8-bit input by 257
    let scale = if matches!(img.color(), image::ColorType::L8) { 257.0 } else { 1.0 };
    let pixels = luma.as_raw().iter().map(|&v| T::lit(v as f64 / scale)).collect();
    GrayImage::new(w as usize, h as usize, pixels)
}

/// Reads a pixel grid written as comma-separated rows.
pub fn read_csv_grid<T: Scalar>(path: impl AsRef<Path>) -> Result<GrayImage<T>> {
    let text = std::fs::read_to_string(path)?;
    let mut width = 0;
    let mut pixels = Vec::new();
    let mut height = 0;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map(T::lit))
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|e| Error::Image(format!("bad pixel value: {e}")))?;
        if height == 0 {
            width = row.len();
        } else if row.len() != width {
            return Err(Error::DimensionMismatch { expected: width, got: row.len() });
        }
        pixels.extend(row);
        height += 1;
    }
    GrayImage::new(width, height, pixels)
}

/// Dispatches on the extension: `.csv` grids, anything else as PGM.
pub fn load_window<T: Scalar>(path: impl AsRef<Path>) -> Result<GrayImage<T>> {
    let p = path.as_ref();
    match p.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => read_csv_grid(p),
        _ => read_pgm(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_and_binary_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let p2 = dir.path().join("a.pgm");
        std::fs::write(&p2, "P2\n3 2\n255\n0 1 2\n3 4 255\n").unwrap();
        let img: GrayImage<f64> = read_pgm(&p2).unwrap();
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.pixels, vec![0.0, 1.0, 2.0, 3.0, 4.0, 255.0]);

        let p5 = dir.path().join("b.pgm");
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[10, 20, 30, 40]);
        std::fs::write(&p5, bytes).unwrap();
        let img: GrayImage<f32> = load_window(&p5).unwrap();
        assert_eq!(img.pixels, vec![10.0, 20.0, 30.0, 40.0]);
    }

    #[test]
    fn csv_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        std::fs::write(&p, "1,2\n3,4\n").unwrap();
        let img: GrayImage<f64> = load_window(&p).unwrap();
        assert_eq!(img.integral().rect_sum(0, 0, 2, 2), 10.0);
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_csv_grid::<f64>(&p).is_err());
    }
}
