use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical description of the display and its viewing conditions.
///
/// Eccentricity of a pixel follows from `tan(e) = p·‖x − x_C‖ / (d/M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayGeometry {
    /// Metres.
    pub pixel_pitch: f64,
    /// Metres.
    pub viewing_distance: f64,
    /// Optical magnification of an HMD lens; 1 for a desktop monitor.
    pub lens_magnification: f64,
    /// `(width, height)` in pixels.
    pub resolution: (u32, u32),
    /// Pixel the gaze is directed at, in pixel-index coordinates (pixel `i`
    /// is centred on `i`).
    pub center_pixel: (f64, f64),
    pub gamma: f64,
    /// cd/m².
    pub luminance_min: f64,
    /// cd/m².
    pub luminance_max: f64,
    /// Neutral background, cd/m².
    pub background_luminance: f64,
    /// Relative luminance of the R, G and B primaries.
    pub luminance_weights: [f64; 3],
}

impl Default for DisplayGeometry {
    fn default() -> Self {
        Self::study_default()
    }
}

impl DisplayGeometry {
    /// 71 ppd at the centre from 94 cm, covering 46°×20°.
    pub fn study_default() -> Self {
        Self::with_ppd(71.0, 0.94, (46.0, 20.0))
    }

    /// Geometry with the given pixels per degree at the centre and a
    /// resolution that covers `fov_deg` (width, height) symmetrically about it.
    pub fn with_ppd(ppd: f64, viewing_distance: f64, fov_deg: (f64, f64)) -> Self {
        let pixel_pitch = viewing_distance * (1.0 / ppd).to_radians().tan();
        let half = |deg: f64| (deg / 2.0).to_radians().tan() * viewing_distance / pixel_pitch;
        let w = (2.0 * half(fov_deg.0)).round() as u32;
        let h = (2.0 * half(fov_deg.1)).round() as u32;
        Self {
            pixel_pitch,
            viewing_distance,
            lens_magnification: 1.0,
            resolution: (w, h),
            center_pixel: ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0),
            gamma: 1.89,
            luminance_min: 0.6,
            luminance_max: 104.0,
            background_luminance: 28.0,
            luminance_weights: [0.2126, 0.7152, 0.0722],
        }
    }

    /// Same optics with a different pixel grid, gaze at its centre.
    pub fn with_resolution(mut self, width: u32, height: u32) -> Self {
        self.resolution = (width, height);
        self.center_pixel = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pixel pitch", self.pixel_pitch),
            ("viewing distance", self.viewing_distance),
            ("lens magnification", self.lens_magnification),
            ("gamma", self.gamma),
            ("maximum luminance", self.luminance_max),
        ];
        for (what, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.luminance_min >= 0.0 && self.luminance_min < self.luminance_max) {
            return Err(Error::Config(format!(
                "luminance range [{}, {}] is empty",
                self.luminance_min, self.luminance_max
            )));
        }
        if !(self.luminance_min..=self.luminance_max).contains(&self.background_luminance) {
            return Err(Error::OutOfGamut {
                value: self.background_luminance,
                min: self.luminance_min,
                max: self.luminance_max,
            });
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(Error::Config("resolution must be non-zero".into()));
        }
        if self.luminance_weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("luminance weights must be positive".into()));
        }
        Ok(())
    }

    /// Effective viewing distance `d/M` in metres.
    fn effective_distance(&self) -> f64 {
        self.viewing_distance / self.lens_magnification
    }

    /// Pixels per degree at the centre of the display.
    pub fn pixels_per_degree(&self) -> f64 {
        1.0 / (self.pixel_pitch / self.effective_distance()).atan().to_degrees()
    }

    /// Peak MAR of the display, `2/ppd` degrees.
    pub fn omega_s(&self) -> f64 {
        2.0 / self.pixels_per_degree()
    }

    /// Eccentricity in degrees of a pixel position relative to the gaze.
    pub fn pixel_to_eccentricity(&self, x: f64, y: f64) -> f64 {
        let r = (x - self.center_pixel.0).hypot(y - self.center_pixel.1);
        self.offset_to_eccentricity(r)
    }

    /// Eccentricity in degrees of a radial pixel offset from the gaze.
    pub fn offset_to_eccentricity(&self, r_px: f64) -> f64 {
        (self.pixel_pitch * r_px / self.effective_distance()).atan().to_degrees()
    }

    /// Inverse of [`offset_to_eccentricity`](Self::offset_to_eccentricity).
    pub fn eccentricity_to_offset(&self, e_deg: f64) -> f64 {
        e_deg.to_radians().tan() * self.effective_distance() / self.pixel_pitch
    }

    /// Horizontal and vertical visual angles of a pixel, measured separately
    /// along each axis.
    pub fn pixel_to_angles(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.offset_to_eccentricity(x - self.center_pixel.0),
            self.offset_to_eccentricity(y - self.center_pixel.1),
        )
    }

    /// Inverse of [`pixel_to_angles`](Self::pixel_to_angles).
    pub fn angles_to_pixel(&self, ax: f64, ay: f64) -> (f64, f64) {
        (
            self.center_pixel.0 + self.eccentricity_to_offset(ax),
            self.center_pixel.1 + self.eccentricity_to_offset(ay),
        )
    }

    /// Converts a luminance to an 8-bit-normalised linear intensity in `[0, 1]`.
    pub fn normalize(&self, l: f64) -> f64 {
        (l - self.luminance_min) / (self.luminance_max - self.luminance_min)
    }
}
