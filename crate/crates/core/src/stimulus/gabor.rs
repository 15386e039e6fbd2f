use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DisplayGeometry, LuminanceImage};
use crate::error::{Error, Result};

/// A cosine-phase Gabor patch positioned in visual angle relative to the
/// gaze point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaborSpec {
    /// Horizontal and vertical angle of the patch centre, degrees.
    pub center_deg: (f64, f64),
    /// Carrier orientation, degrees. 0 is a vertical grating (horizontal
    /// carrier direction).
    pub orientation_deg: f64,
    /// Envelope standard deviation, degrees.
    pub sigma_deg: f64,
    /// Carrier frequency, cycles per degree.
    pub spatial_frequency: f64,
    /// Michelson contrast.
    pub contrast: f64,
    /// cd/m².
    pub mean_luminance: f64,
    /// Carrier phase at the centre, radians.
    #[serde(default)]
    pub phase: f64,
}

impl GaborSpec {
    /// Study stimulus: σ is 20 % of the nominal diameter.
    pub fn from_diameter(
        center_deg: (f64, f64),
        orientation_deg: f64,
        diameter_deg: f64,
        spatial_frequency: f64,
        contrast: f64,
        mean_luminance: f64,
    ) -> Self {
        Self {
            center_deg,
            orientation_deg,
            sigma_deg: 0.2 * diameter_deg,
            spatial_frequency,
            contrast,
            mean_luminance,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_deg > 0.0) {
            return Err(Error::domain("Gabor sigma", self.sigma_deg, "> 0 degrees"));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::domain("Gabor contrast", self.contrast, "[0, 1]"));
        }
        if !(self.spatial_frequency >= 0.0 && self.spatial_frequency.is_finite()) {
            return Err(Error::domain("spatial frequency", self.spatial_frequency, ">= 0 cpd"));
        }
        if !(self.mean_luminance > 0.0) {
            return Err(Error::domain("mean luminance", self.mean_luminance, "> 0"));
        }
        Ok(())
    }

    /// Signed modulation `c·env·carrier` at visual angle `(ax, ay)`.
    #[inline]
    pub fn modulation(&self, ax: f64, ay: f64) -> f64 {
        let dx = ax - self.center_deg.0;
        let dy = ay - self.center_deg.1;
        let env = (-(dx * dx + dy * dy) / (2.0 * self.sigma_deg * self.sigma_deg)).exp();
        let th = self.orientation_deg.to_radians();
        let u = dx * th.cos() + dy * th.sin();
        self.contrast * env * (2.0 * std::f64::consts::PI * self.spatial_frequency * u + self.phase).cos()
    }
}

/// Renders one Gabor patch over the full display.
pub fn gabor_image(spec: &GaborSpec, geom: &DisplayGeometry) -> Result<LuminanceImage> {
    gabors_image(std::slice::from_ref(spec), geom)
}

/// Renders several non-overlapping patches sharing one mean luminance, e.g.
/// the left/right pair of a 2AFC trial. Pixel positions are converted to
/// visual angle per axis.
pub fn gabors_image(specs: &[GaborSpec], geom: &DisplayGeometry) -> Result<LuminanceImage> {
    geom.validate()?;
    let Some(first) = specs.first() else {
        let (w, h) = geom.resolution;
        return Ok(LuminanceImage::filled(w as usize, h as usize, geom.background_luminance));
    };
    let mean = first.mean_luminance;
    for s in specs {
        s.validate()?;
        if s.mean_luminance != mean {
            return Err(Error::InvalidParameter("Gabor patches must share a mean luminance".into()));
        }
        let lo = mean * (1.0 - s.contrast);
        let hi = mean * (1.0 + s.contrast);
        if lo < geom.luminance_min || hi > geom.luminance_max {
            return Err(Error::Clipping(format!(
                "contrast {} around {mean} cd/m² spans [{lo}, {hi}], display range is [{}, {}]",
                s.contrast, geom.luminance_min, geom.luminance_max
            )));
        }
    }

    let (w, h) = (geom.resolution.0 as usize, geom.resolution.1 as usize);
    let ax: Vec<f64> = (0..w).map(|x| geom.pixel_to_angles(x as f64, 0.0).0).collect();
    let mut samples = vec![mean; w * h];
    samples.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let ay = geom.pixel_to_angles(0.0, y as f64).1;
        for (x, v) in row.iter_mut().enumerate() {
            let m: f64 = specs.iter().map(|s| s.modulation(ax[x], ay)).sum();
            *v = (mean * (1.0 + m)).clamp(geom.luminance_min, geom.luminance_max);
        }
    });
    LuminanceImage::from_samples(w, h, samples)
}

/// `(max − min)/(max + min)` over pixels within `radius_deg` of a point.
pub fn michelson_contrast(img: &LuminanceImage, geom: &DisplayGeometry, center_deg: (f64, f64), radius_deg: f64) -> f64 {
    let (cx, cy) = geom.angles_to_pixel(center_deg.0, center_deg.1);
    let r = geom.eccentricity_to_offset(radius_deg).ceil() as isize + 1;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in (cy as isize - r)..=(cy as isize + r) {
        for x in (cx as isize - r)..=(cx as isize + r) {
            if x < 0 || y < 0 || x >= img.width as isize || y >= img.height as isize {
                continue;
            }
            let (ax, ay) = geom.pixel_to_angles(x as f64, y as f64);
            if (ax - center_deg.0).hypot(ay - center_deg.1) > radius_deg {
                continue;
            }
            let v = img.get(x as usize, y as usize);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (hi - lo) / (hi + lo)
}
