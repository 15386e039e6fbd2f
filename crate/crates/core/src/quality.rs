//! Band-limited visual difference predictor with an attention-aware CSF, and
//! the bisection search for the most aggressive acceptable foveation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::attention::AttentionLevel;
use crate::csf::{AttentionModel, BaselineCsf, CorticalSurrogateCsf, CsfQuery, Eccentricity};
use crate::error::{Error, Result};
use crate::foveation::{foveate_image, FoveationConfig, MarModel};
use crate::pyramid::LaplacianPyramid;
use crate::stimulus::{DisplayGeometry, LuminanceImage};

/// Quality of a test image relative to its reference; 10 means no visible
/// difference.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct QualityScore {
    pub jod: f64,
}

/// Predictor settings. The attention level scales the baseline CSF; `Low`
/// leaves it untouched.
#[derive(Clone)]
pub struct PredictorConfig {
    /// Pyramid levels including the low-pass residual.
    pub band_count: usize,
    pub attention: AttentionLevel,
    pub baseline_csf: Arc<dyn BaselineCsf>,
    pub attention_model: AttentionModel,
    pub pooling_exponent: f64,
    /// JOD lost per unit of pooled threshold-normalised error.
    pub jod_per_unit: f64,
    /// Gaze position in image pixels; the image centre if unset.
    pub gaze_center: Option<(f64, f64)>,
}

impl std::fmt::Debug for PredictorConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PredictorConfig")
            .field("band_count", &self.band_count)
            .field("attention", &self.attention)
            .field("pooling_exponent", &self.pooling_exponent)
            .field("jod_per_unit", &self.jod_per_unit)
            .field("gaze_center", &self.gaze_center)
            .finish_non_exhaustive()
    }
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            band_count: 6,
            attention: AttentionLevel::Low,
            baseline_csf: Arc::new(CorticalSurrogateCsf::default()),
            attention_model: AttentionModel::published(),
            pooling_exponent: 4.0,
            jod_per_unit: 0.25,
            gaze_center: None,
        }
    }
}

impl PredictorConfig {
    pub fn with_attention(&self, attention: AttentionLevel) -> Self {
        Self {
            attention,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.band_count < 3 {
            return Err(Error::InvalidParameter(format!(
                "band count must be at least 3, got {}",
                self.band_count
            )));
        }
        if !(self.pooling_exponent >= 1.0) {
            return Err(Error::domain("pooling exponent", self.pooling_exponent, ">= 1"));
        }
        if !(self.jod_per_unit > 0.0) {
            return Err(Error::domain("JOD scale", self.jod_per_unit, "> 0"));
        }
        Ok(())
    }
}

/// Peak frequency of a Laplacian band at `ppd_band` samples per degree: the
/// geometric centre of its half-octave-to-Nyquist range.
pub fn band_frequency(ppd_band: f64) -> f64 {
    ppd_band / (2.0 * std::f64::consts::SQRT_2)
}

/// Whether the attention gain is applied; lets the same code path serve as
/// the attention-unaware baseline.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Scaling {
    Attention,
    Baseline,
}

fn pooled_error(
    reference: &LuminanceImage,
    test: &LuminanceImage,
    geom: &DisplayGeometry,
    cfg: &PredictorConfig,
    scaling: Scaling,
) -> Result<f64> {
    cfg.validate()?;
    reference.ensure_same_size(test)?;
    let ppd = geom.pixels_per_degree();
    let gaze = cfg.gaze_center.unwrap_or((
        (reference.width as f64 - 1.0) / 2.0,
        (reference.height as f64 - 1.0) / 2.0,
    ));
    let pr = LaplacianPyramid::build(reference, cfg.band_count);
    let pt = LaplacianPyramid::build(test, cfg.band_count);
    let (fmin, fmax) = cfg.baseline_csf.frequency_domain();
    let beta = cfg.pooling_exponent;

    let mut total = 0.0;
    for b in 0..pr.bands.len() - 1 {
        let step = (1usize << b) as f64;
        let raw_f = band_frequency(ppd / step);
        let f = raw_f.clamp(fmin, fmax);
        if f != raw_f {
            log::warn!("band {b} frequency {raw_f:.3} cpd clamped to the CSF domain [{fmin}, {fmax}]");
        }
        let area = (step / ppd).powi(2);
        let (rb, tb) = (&pr.bands[b], &pt.bands[b]);
        let (rl, tl) = (&pr.lowpass[b], &pt.lowpass[b]);
        let mut band_sum = 0.0;
        for y in 0..rb.height {
            for x in 0..rb.width {
                let i = y * rb.width + x;
                let lr = rl.samples[i].max(1e-6);
                let dc = tb.samples[i] / tl.samples[i].max(1e-6) - rb.samples[i] / lr;
                if dc == 0.0 {
                    continue;
                }
                let e = geom.offset_to_eccentricity((x as f64 * step - gaze.0).hypot(y as f64 * step - gaze.1));
                let q = CsfQuery {
                    spatial_frequency: f,
                    eccentricity: Eccentricity::new(e)?,
                    luminance: lr,
                    area,
                };
                let mut s = cfg.baseline_csf.sensitivity(&q)?;
                if scaling == Scaling::Attention {
                    s /= cfg.attention_model.foveation_gain(cfg.attention, e);
                }
                band_sum += (dc.abs() * s).powf(beta) * area;
            }
        }
        total += band_sum;
    }
    Ok(total.powf(1.0 / beta))
}

/// Scores `test` against `reference`. Identical images score exactly 10.
pub fn predict_quality(
    reference: &LuminanceImage,
    test: &LuminanceImage,
    geom: &DisplayGeometry,
    cfg: &PredictorConfig,
) -> Result<QualityScore> {
    let d = pooled_error(reference, test, geom, cfg, Scaling::Attention)?;
    Ok(QualityScore {
        jod: 10.0 - cfg.jod_per_unit * d,
    })
}

/// The same predictor without the attention scaling.
pub fn predict_quality_baseline(
    reference: &LuminanceImage,
    test: &LuminanceImage,
    geom: &DisplayGeometry,
    cfg: &PredictorConfig,
) -> Result<QualityScore> {
    let d = pooled_error(reference, test, geom, cfg, Scaling::Baseline)?;
    Ok(QualityScore {
        jod: 10.0 - cfg.jod_per_unit * d,
    })
}

/// Quality of `reference` after foveation with slope `m`.
pub fn quality_at_slope(
    reference: &LuminanceImage,
    geom: &DisplayGeometry,
    cfg: &PredictorConfig,
    foveation: &FoveationConfig,
    m: f64,
) -> Result<QualityScore> {
    let mut fov = *foveation;
    if fov.gaze_center.is_none() {
        fov.gaze_center = cfg.gaze_center;
    }
    let test = foveate_image(reference, geom, &MarModel::new(m)?, &fov)?;
    predict_quality(reference, &test, geom, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSearch {
    pub slope: f64,
    pub quality: f64,
    /// Every `(m, Q(m))` evaluated, in order.
    pub trace: Vec<(f64, f64)>,
}

/// Largest `m` in `[lo, hi]` with `q(m) ≥ q_thr` for a non-increasing `q`,
/// to within `tol`.
pub fn bisect_largest(
    mut q: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    q_thr: f64,
    tol: f64,
) -> Result<SlopeSearch> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi && tol > 0.0) {
        return Err(Error::DegenerateBracket { lo, hi });
    }
    let mut trace = Vec::new();
    let q_lo = q(lo)?;
    trace.push((lo, q_lo));
    if q_lo < q_thr {
        return Err(Error::Infeasible { q_thr, q_lo });
    }
    let q_hi = q(hi)?;
    trace.push((hi, q_hi));
    if q_hi >= q_thr {
        return Ok(SlopeSearch {
            slope: hi,
            quality: q_hi,
            trace,
        });
    }
    let (mut a, mut qa, mut b) = (lo, q_lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let qm = q(mid)?;
        trace.push((mid, qm));
        if qm >= q_thr {
            a = mid;
            qa = qm;
        } else {
            b = mid;
        }
    }
    Ok(SlopeSearch {
        slope: a,
        quality: qa,
        trace,
    })
}

/// Largest MAR slope whose foveated result still scores at least `q_thr`.
pub fn optimize_mar_slope(
    reference: &LuminanceImage,
    geom: &DisplayGeometry,
    cfg: &PredictorConfig,
    foveation: &FoveationConfig,
    q_thr: f64,
    bracket: (f64, f64),
) -> Result<SlopeSearch> {
    bisect_largest(
        |m| quality_at_slope(reference, geom, cfg, foveation, m).map(|s| s.jod),
        bracket.0,
        bracket.1,
        q_thr,
        1e-4,
    )
}
