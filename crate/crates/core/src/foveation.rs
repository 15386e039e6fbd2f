//! Minimum-angle-of-resolution model, the blur field it implies and a fast
//! spatially varying Gaussian filter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::AttentionLevel;
use crate::error::{Error, Result};
use crate::pyramid::{bilinear, decimate, gaussian_blur};
use crate::reference_data::mean_mar_slope;
use crate::stimulus::{DisplayGeometry, LuminanceImage};

/// Linear MAR `ω(e) = m·e + ω0`, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarModel {
    pub slope: f64,
    pub omega0: f64,
}

impl MarModel {
    pub const DEFAULT_OMEGA0: f64 = 1.0 / 48.0;

    pub fn new(slope: f64) -> Result<Self> {
        let m = Self {
            slope,
            omega0: Self::DEFAULT_OMEGA0,
        };
        m.validate()?;
        Ok(m)
    }

    /// Mean slope measured for an attention level.
    pub fn for_attention(a: AttentionLevel) -> Self {
        Self {
            slope: mean_mar_slope(a),
            omega0: Self::DEFAULT_OMEGA0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope >= 0.0 && self.slope.is_finite()) {
            return Err(Error::domain("MAR slope", self.slope, ">= 0"));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::domain("MAR intercept", self.omega0, "> 0"));
        }
        Ok(())
    }

    pub fn mar(&self, e_deg: f64) -> f64 {
        self.slope * e_deg + self.omega0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoveationConfig {
    /// Peak MAR the display can reproduce, degrees.
    pub omega_s: f64,
    /// Cut-off constant of the blur mapping.
    pub sigma_c: f64,
    /// Gaze position in image pixel coordinates; the image centre if unset.
    #[serde(default)]
    pub gaze_center: Option<(f64, f64)>,
}

impl FoveationConfig {
    /// `ω_s = 2/ppd`, `σ_c = 2`, gaze at the image centre.
    pub fn for_display(geom: &DisplayGeometry) -> Self {
        Self {
            omega_s: geom.omega_s(),
            sigma_c: 2.0,
            gaze_center: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_s > 0.0) {
            return Err(Error::domain("omega_s", self.omega_s, "> 0"));
        }
        if !(self.sigma_c > 0.0) {
            return Err(Error::domain("sigma_c", self.sigma_c, "> 0"));
        }
        Ok(())
    }

    fn gaze(&self, img: &LuminanceImage) -> (f64, f64) {
        self.gaze_center
            .unwrap_or(((img.width as f64 - 1.0) / 2.0, (img.height as f64 - 1.0) / 2.0))
    }
}

/// Standard deviation of the blur at eccentricity `e`,
/// `max(0, (ω(e)/ω_s − 1)/(2σ_c))`, expressed in display pixels.
pub fn blur_sigma(model: &MarModel, cfg: &FoveationConfig, e_deg: f64) -> f64 {
    ((model.mar(e_deg) / cfg.omega_s - 1.0) / (2.0 * cfg.sigma_c)).max(0.0)
}

/// Per-pixel blur σ for an image of the given size.
pub fn sigma_map(img: &LuminanceImage, geom: &DisplayGeometry, model: &MarModel, cfg: &FoveationConfig) -> Vec<f64> {
    let (gx, gy) = cfg.gaze(img);
    let w = img.width;
    let mut out = vec![0.0; img.samples.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, s) in row.iter_mut().enumerate() {
            let e = geom.offset_to_eccentricity((x as f64 - gx).hypot(y as f64 - gy));
            *s = blur_sigma(model, cfg, e);
        }
    });
    out
}

/// Pixels at or below this σ are filtered exactly.
pub const EXACT_SIGMA_MAX: f64 = 2.0;
/// Spacing of the Gaussian stack used above [`EXACT_SIGMA_MAX`].
pub const LEVELS_PER_OCTAVE: f64 = 8.0;
/// A stack level is decimated once its blur reaches this many of its pixels.
const DECIMATE_AT: f64 = 6.0;

/// Clamp-to-edge Gaussian of width `sigma` evaluated at one pixel.
fn gather(img: &LuminanceImage, x: usize, y: usize, sigma: f64, weights: &mut Vec<f64>) -> f64 {
    let r = (4.0 * sigma).ceil() as isize;
    weights.clear();
    weights.extend((-r..=r).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()));
    let norm: f64 = weights.iter().sum();
    let mut acc = 0.0;
    for (j, wy) in weights.iter().enumerate() {
        let sy = y as isize + j as isize - r;
        let mut row = 0.0;
        for (i, wx) in weights.iter().enumerate() {
            row += wx * img.get_clamped(x as isize + i as isize - r, sy);
        }
        acc += wy * row;
    }
    acc / (norm * norm)
}

/// Filters each pixel with the Gaussian implied by its own eccentricity.
///
/// Pixels with zero σ are copied unchanged and small σ are filtered exactly.
/// Larger σ are served from a cascaded Gaussian stack spaced an eighth of an
/// octave apart; stack levels are decimated once they are smooth enough, and
/// each pixel blends its two neighbouring levels so that the blend variance
/// equals `σ²`. Borders are clamped: the stack is built on a copy padded by
/// edge replication wide enough that it behaves like a single clamped
/// Gaussian.
pub fn foveate_image(
    img: &LuminanceImage,
    geom: &DisplayGeometry,
    model: &MarModel,
    cfg: &FoveationConfig,
) -> Result<LuminanceImage> {
    model.validate()?;
    cfg.validate()?;
    let (gx, gy) = cfg.gaze(img);
    if !(0.0..img.width as f64).contains(&gx) || !(0.0..img.height as f64).contains(&gy) {
        return Err(Error::InvalidParameter(format!("gaze ({gx}, {gy}) is outside the image")));
    }
    let sigma = sigma_map(img, geom, model, cfg);
    let w = img.width;

    let mut out = img.samples.clone();
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut weights = Vec::new();
        for (x, o) in row.iter_mut().enumerate() {
            let s = sigma[y * w + x];
            if s > 0.0 && s <= EXACT_SIGMA_MAX {
                *o = gather(img, x, y, s, &mut weights);
            }
        }
    });

    let max_sigma = sigma.iter().copied().fold(0.0, f64::max);
    if max_sigma <= EXACT_SIGMA_MAX {
        return LuminanceImage::from_samples(w, img.height, out);
    }

    let ratio = 2f64.powf(1.0 / LEVELS_PER_OCTAVE);
    let mut levels = vec![EXACT_SIGMA_MAX / ratio];
    while *levels.last().expect("non-empty") < max_sigma {
        let next = levels.last().expect("non-empty") * ratio;
        levels.push(next);
    }
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); levels.len()];
    for (i, &s) in sigma.iter().enumerate() {
        if s > EXACT_SIGMA_MAX {
            let k = levels.partition_point(|&l| l < s);
            bins[k].push(i);
        }
    }

    let pad = (4.0 * max_sigma).ceil() as usize + 1;
    let mut cur = LuminanceImage::from_fn(w + 2 * pad, img.height + 2 * pad, |x, y| {
        img.get_clamped(x as isize - pad as isize, y as isize - pad as isize)
    });
    let mut scale = 1.0;
    let mut var_acc: f64 = 0.0;
    let mut prev: Option<(LuminanceImage, f64)> = None;
    for (k, &sk) in levels.iter().enumerate() {
        if var_acc.sqrt() / scale >= DECIMATE_AT && cur.width >= 16 && cur.height >= 16 {
            cur = decimate(&cur);
            scale *= 2.0;
        }
        cur = gaussian_blur(&cur, (sk * sk - var_acc).sqrt() / scale);
        var_acc = sk * sk;
        if let Some((lower, lower_scale)) = &prev {
            let sl = levels[k - 1];
            for &i in &bins[k] {
                let (x, y) = ((i % w + pad) as f64, (i / w + pad) as f64);
                let t = (sigma[i] * sigma[i] - sl * sl) / (sk * sk - sl * sl);
                let a = bilinear(lower, x / lower_scale, y / lower_scale);
                let b = bilinear(&cur, x / scale, y / scale);
                out[i] = a + t * (b - a);
            }
        }
        if bins[k + 1..].iter().all(Vec::is_empty) {
            break;
        }
        prev = Some((cur.clone(), scale));
    }
    LuminanceImage::from_samples(w, img.height, out)
}

/// Half-width of the neutral bar separating split-screen halves, degrees.
pub const BAR_HALF_WIDTH_DEG: f64 = 3.0;
/// Standard deviation of the bar's fall-off, degrees.
pub const BAR_FALLOFF_SIGMA_DEG: f64 = 0.5;

/// Weight of the neutral background at horizontal angle `ax` from the
/// centre: 1 inside the bar, Gaussian fall-off beyond its edge.
pub fn bar_weight(ax_deg: f64) -> f64 {
    let d = ax_deg.abs() - BAR_HALF_WIDTH_DEG;
    if d <= 0.0 {
        1.0
    } else {
        (-d * d / (2.0 * BAR_FALLOFF_SIGMA_DEG * BAR_FALLOFF_SIGMA_DEG)).exp()
    }
}

/// Left half from `left`, right half from `right`, separated by a neutral
/// vertical bar at the display centre.
pub fn compose_split_screen(
    left: &LuminanceImage,
    right: &LuminanceImage,
    geom: &DisplayGeometry,
) -> Result<LuminanceImage> {
    left.ensure_same_size(right)?;
    let cx = (left.width as f64 - 1.0) / 2.0;
    let bg = geom.background_luminance;
    let weights: Vec<f64> = (0..left.width)
        .map(|x| bar_weight(geom.offset_to_eccentricity((x as f64 - cx).abs())))
        .collect();
    Ok(LuminanceImage::from_fn(left.width, left.height, |x, y| {
        let content = if (x as f64) < cx { left.get(x, y) } else { right.get(x, y) };
        let wgt = weights[x];
        wgt * bg + (1.0 - wgt) * content
    }))
}
