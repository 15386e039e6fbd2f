use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major linear luminance image in cd/m².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LuminanceImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<f64>,
}

impl LuminanceImage {
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self { width, height, samples }
    }

    pub fn from_samples(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "{} samples for a {width}x{height} image",
                samples.len()
            )));
        }
        Ok(Self { width, height, samples })
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.samples[y * self.width + x] = v;
    }

    /// Sample with coordinates clamped to the image.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn ensure_same_size(&self, other: &Self) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch {
                left: self.dimensions(),
                right: other.dimensions(),
            });
        }
        Ok(())
    }

    /// Clamps every sample into `[lo, hi]`.
    pub fn clamp(&mut self, lo: f64, hi: f64) {
        for v in &mut self.samples {
            *v = v.clamp(lo, hi);
        }
    }
}
