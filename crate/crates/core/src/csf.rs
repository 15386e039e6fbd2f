//! Attention-aware contrast thresholds and sensitivity.
//!
//! Thresholds are Michelson contrasts in `[0, 1]`; sensitivities are their
//! reciprocals. The models were measured between 7° and 21° eccentricity;
//! evaluating them elsewhere is allowed but the result carries an
//! `extrapolated` flag.

use serde::{Deserialize, Serialize};

use crate::attention::AttentionLevel;
use crate::error::{Error, Result};

/// Lowest measured eccentricity, degrees.
pub const MEASURED_MIN_DEG: f64 = 7.0;
/// Highest measured eccentricity, degrees.
pub const MEASURED_MAX_DEG: f64 = 21.0;

/// Angular distance from the point of gaze, in degrees of visual angle.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Eccentricity(f64);

impl Eccentricity {
    pub fn new(degrees: f64) -> Result<Self> {
        if degrees.is_finite() && degrees >= 0.0 {
            Ok(Self(degrees))
        } else {
            Err(Error::domain("eccentricity", degrees, "finite and >= 0"))
        }
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    pub fn is_measured(self) -> bool {
        (MEASURED_MIN_DEG..=MEASURED_MAX_DEG).contains(&self.0)
    }
}

impl TryFrom<f64> for Eccentricity {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Eccentricity> for f64 {
    fn from(e: Eccentricity) -> f64 {
        e.0
    }
}

/// A model output together with whether it was obtained outside the measured
/// eccentricity range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated<T> {
    pub value: T,
    pub extrapolated: bool,
}

impl<T> Evaluated<T> {
    fn at(value: T, e: Eccentricity) -> Self {
        Self {
            value,
            extrapolated: !e.is_measured(),
        }
    }
}

/// Per-condition threshold model `t(e) = p0·√e + p1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    /// Contrast per √degree.
    pub p0: f64,
    /// Contrast.
    pub p1: f64,
    pub attention: AttentionLevel,
}

impl ThresholdModel {
    pub fn new(attention: AttentionLevel, p0: f64, p1: f64) -> Self {
        Self { p0, p1, attention }
    }

    pub fn threshold(&self, e: Eccentricity) -> Evaluated<f64> {
        Evaluated::at(self.p0 * e.degrees().sqrt() + self.p1, e)
    }

    /// Checks that the model predicts positive thresholds across the measured
    /// range. The model is affine in √e so the endpoints suffice.
    pub fn validate(&self) -> Result<()> {
        if !(self.p0.is_finite() && self.p1.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite threshold model for {}",
                self.attention
            )));
        }
        for e in [MEASURED_MIN_DEG, MEASURED_MAX_DEG] {
            let t = self.p0 * e.sqrt() + self.p1;
            if t <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{} model predicts non-positive threshold {t} at {e}°",
                    self.attention
                )));
            }
        }
        Ok(())
    }
}

/// The three per-condition models that together define the attention gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionModel {
    pub low: ThresholdModel,
    pub medium: ThresholdModel,
    pub high: ThresholdModel,
}

impl AttentionModel {
    pub fn new(low: ThresholdModel, medium: ThresholdModel, high: ThresholdModel) -> Result<Self> {
        let model = Self { low, medium, high };
        for (expected, m) in AttentionLevel::ALL.iter().zip([low, medium, high]) {
            if m.attention != *expected {
                return Err(Error::InvalidParameter(format!(
                    "model for {} is tagged {}",
                    expected, m.attention
                )));
            }
            m.validate()?;
        }
        Ok(model)
    }

    /// Published per-condition fit.
    pub fn published() -> Self {
        crate::reference_data::PUBLISHED_ATTENTION_MODEL
    }

    pub fn model(&self, attention: AttentionLevel) -> &ThresholdModel {
        match attention {
            AttentionLevel::Low => &self.low,
            AttentionLevel::Medium => &self.medium,
            AttentionLevel::High => &self.high,
        }
    }

    pub fn threshold(&self, attention: AttentionLevel, e: Eccentricity) -> Evaluated<f64> {
        self.model(attention).threshold(e)
    }

    /// Threshold elevation relative to the low-attention baseline,
    /// `g_a(e) = t_a(e) / t_low(e)`. Exactly 1 for `Low`.
    pub fn gain(&self, attention: AttentionLevel, e: Eccentricity) -> Result<Evaluated<f64>> {
        let base = self.low.threshold(e);
        if base.value <= 0.0 || !base.value.is_finite() {
            return Err(Error::DivisionGuard(base.value));
        }
        let t = self.threshold(attention, e);
        Ok(Evaluated {
            value: t.value / base.value,
            extrapolated: base.extrapolated,
        })
    }

    /// Gain used when the model drives foveation or quality prediction over a
    /// whole image.
    ///
    /// Beyond 21° the gain is held at its 21° value. Below 7° it ramps
    /// linearly from 1 at the fovea to the 7° value, since the fovea is where
    /// the attention is directed and extrapolating the square-root model there
    /// produces negative thresholds.
    pub fn foveation_gain(&self, attention: AttentionLevel, e_deg: f64) -> f64 {
        if attention == AttentionLevel::Low {
            return 1.0;
        }
        let at = |deg: f64| {
            let e = Eccentricity(deg);
            self.threshold(attention, e).value / self.low.threshold(e).value
        };
        if e_deg >= MEASURED_MAX_DEG {
            at(MEASURED_MAX_DEG)
        } else if e_deg >= MEASURED_MIN_DEG {
            at(e_deg)
        } else {
            let g7 = at(MEASURED_MIN_DEG);
            1.0 + (g7 - 1.0) * e_deg.max(0.0) / MEASURED_MIN_DEG
        }
    }
}

/// Linear interpolation `α(1 − w) + βw` used to sweep between the low- and
/// high-attention curves.
pub fn interpolate(alpha: f64, beta: f64, w: f64) -> f64 {
    alpha * (1.0 - w) + beta * w
}

/// Unified model over eccentricity and the continuous attention coordinate:
///
/// `t(e, a) = lerp(s0, s1, a^γs)·(√e − √7) + lerp(i0, i1, a^γi)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnifiedModel {
    pub s0: f64,
    pub s1: f64,
    pub i0: f64,
    pub i1: f64,
    pub gamma_s: f64,
    pub gamma_i: f64,
}

impl UnifiedModel {
    pub const GAMMA_S: f64 = 0.5;

    pub fn new(s0: f64, s1: f64, i0: f64, i1: f64, gamma_i: f64) -> Result<Self> {
        let m = Self {
            s0,
            s1,
            i0,
            i1,
            gamma_s: Self::GAMMA_S,
            gamma_i,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn published() -> Self {
        crate::reference_data::PUBLISHED_UNIFIED_MODEL
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_s != Self::GAMMA_S {
            return Err(Error::InvalidParameter(format!(
                "gamma_s must be {} (got {})",
                Self::GAMMA_S,
                self.gamma_s
            )));
        }
        for (name, v) in [
            ("s0", self.s0),
            ("s1", self.s1),
            ("i0", self.i0),
            ("i1", self.i1),
            ("gamma_i", self.gamma_i),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "unified model parameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn threshold(&self, e: Eccentricity, a_c: f64) -> Result<Evaluated<f64>> {
        if !(0.0..=1.0).contains(&a_c) {
            return Err(Error::domain("attention coordinate", a_c, "[0, 1]"));
        }
        let slope = interpolate(self.s0, self.s1, a_c.powf(self.gamma_s));
        let intercept = interpolate(self.i0, self.i1, a_c.powf(self.gamma_i));
        let t = slope * (e.degrees().sqrt() - MEASURED_MIN_DEG.sqrt()) + intercept;
        Ok(Evaluated::at(t, e))
    }

    /// Gain relative to `a_c = 0`.
    pub fn gain(&self, e: Eccentricity, a_c: f64) -> Result<Evaluated<f64>> {
        let base = self.threshold(e, 0.0)?;
        if base.value <= 0.0 {
            return Err(Error::DivisionGuard(base.value));
        }
        let t = self.threshold(e, a_c)?;
        Ok(Evaluated {
            value: t.value / base.value,
            extrapolated: t.extrapolated,
        })
    }
}

/// V1 cortical magnification `M(e) = a0 / (e + e2)` in mm of cortex per
/// degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorticalMagnification {
    pub a0: f64,
    pub e2: f64,
}

impl Default for CorticalMagnification {
    fn default() -> Self {
        Self { a0: 29.2, e2: 3.67 }
    }
}

impl CorticalMagnification {
    pub fn magnification(&self, e: Eccentricity) -> f64 {
        self.a0 / (e.degrees() + self.e2)
    }

    /// Rescales a stimulus defined at `reference.eccentricity` so that it
    /// covers the same cortical extent at `e`. Frequency scales with `M`,
    /// diameter with `1/M`; their product is invariant.
    pub fn scale_stimulus(&self, reference: &StimulusReference, e: Eccentricity) -> ScaledStimulus {
        let ratio = self.magnification(e) / self.magnification(reference.eccentricity);
        ScaledStimulus {
            frequency: reference.frequency * ratio,
            diameter: reference.diameter / ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StimulusReference {
    pub eccentricity: Eccentricity,
    /// Cycles per degree.
    pub frequency: f64,
    /// Degrees.
    pub diameter: f64,
}

impl StimulusReference {
    /// 2 cpd, 5° diameter at 21°.
    pub fn study_default() -> Self {
        Self {
            eccentricity: Eccentricity(21.0),
            frequency: 2.0,
            diameter: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledStimulus {
    pub frequency: f64,
    pub diameter: f64,
}

/// Inputs to a baseline (attention-unaware) CSF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsfQuery {
    /// Cycles per degree.
    pub spatial_frequency: f64,
    pub eccentricity: Eccentricity,
    /// Adaptation luminance, cd/m².
    pub luminance: f64,
    /// Stimulus area, deg².
    pub area: f64,
}

/// Any contrast sensitivity model that does not account for attention.
pub trait BaselineCsf: Send + Sync {
    fn sensitivity(&self, query: &CsfQuery) -> Result<f64>;

    /// Spatial frequencies (cpd) the model is defined for.
    fn frequency_domain(&self) -> (f64, f64);
}

/// Attention-aware sensitivity `S_a = S / g_a(e)`.
///
/// Errors raised by the baseline are passed through unchanged.
pub fn scale_sensitivity(
    baseline: &dyn BaselineCsf,
    model: &AttentionModel,
    attention: AttentionLevel,
    query: &CsfQuery,
) -> Result<f64> {
    let s = baseline.sensitivity(query)?;
    let g = model.gain(attention, query.eccentricity)?;
    Ok(s / g.value)
}

/// Surrogate baseline CSF in which sensitivity depends only on the cortically
/// normalised frequency `f·M(0)/M(e)`.
///
/// The foveal shape is a log-parabola; its peak is calibrated so that the
/// cortically scaled study stimuli (2 cpd at 21° and its scaled versions)
/// yield the mean low-attention threshold. Luminance and area are accepted
/// for interface compatibility but do not change the result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorticalSurrogateCsf {
    pub peak_sensitivity: f64,
    /// Cycles per degree of the foveal peak.
    pub peak_frequency: f64,
    /// Decades from the peak at which sensitivity drops by a factor of ten.
    pub bandwidth_decades: f64,
    pub magnification: CorticalMagnification,
}

impl CorticalSurrogateCsf {
    pub const MIN_FREQUENCY: f64 = 0.05;
    pub const MAX_FREQUENCY: f64 = 64.0;

    /// Calibrates the peak so that `sensitivity(reference) = 1 / threshold`.
    pub fn calibrated(reference: &StimulusReference, threshold: f64) -> Self {
        let mut csf = Self {
            peak_sensitivity: 1.0,
            peak_frequency: 3.0,
            bandwidth_decades: 1.0,
            magnification: CorticalMagnification::default(),
        };
        let shape = csf.shape(csf.normalized_frequency(reference.frequency, reference.eccentricity));
        csf.peak_sensitivity = 1.0 / (threshold * shape);
        csf
    }

    fn normalized_frequency(&self, f: f64, e: Eccentricity) -> f64 {
        let m0 = self.magnification.magnification(Eccentricity(0.0));
        f * m0 / self.magnification.magnification(e)
    }

    fn shape(&self, f_norm: f64) -> f64 {
        let x = (f_norm / self.peak_frequency).log10() / self.bandwidth_decades;
        10f64.powf(-x * x)
    }
}

impl Default for CorticalSurrogateCsf {
    fn default() -> Self {
        let low = &crate::reference_data::MAIN_STUDY_THRESHOLDS;
        let mean_low = low.iter().map(|row| row[0]).sum::<f64>() / low.len() as f64;
        Self::calibrated(&StimulusReference::study_default(), mean_low)
    }
}

impl BaselineCsf for CorticalSurrogateCsf {
    fn sensitivity(&self, q: &CsfQuery) -> Result<f64> {
        let f = q.spatial_frequency;
        if !(Self::MIN_FREQUENCY..=Self::MAX_FREQUENCY).contains(&f) {
            return Err(Error::domain(
                "spatial frequency",
                f,
                "[0.05, 64] cpd for the surrogate CSF",
            ));
        }
        if !(q.luminance > 0.0) {
            return Err(Error::domain("luminance", q.luminance, "> 0 cd/m²"));
        }
        if !(q.area > 0.0) {
            return Err(Error::domain("area", q.area, "> 0 deg²"));
        }
        Ok(self.peak_sensitivity * self.shape(self.normalized_frequency(f, q.eccentricity)))
    }

    fn frequency_domain(&self) -> (f64, f64) {
        (Self::MIN_FREQUENCY, Self::MAX_FREQUENCY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ecc(d: f64) -> Eccentricity {
        Eccentricity::new(d).unwrap()
    }

    struct Constant(f64);

    impl BaselineCsf for Constant {
        fn sensitivity(&self, _: &CsfQuery) -> Result<f64> {
            Ok(self.0)
        }
        fn frequency_domain(&self) -> (f64, f64) {
            (0.0, f64::INFINITY)
        }
    }

    struct Failing;

    impl BaselineCsf for Failing {
        fn sensitivity(&self, q: &CsfQuery) -> Result<f64> {
            Err(Error::domain("spatial frequency", q.spatial_frequency, "nowhere"))
        }
        fn frequency_domain(&self) -> (f64, f64) {
            (0.0, 0.0)
        }
    }

    fn query(e: f64) -> CsfQuery {
        CsfQuery {
            spatial_frequency: 2.0,
            eccentricity: ecc(e),
            luminance: 28.0,
            area: 1.0,
        }
    }

    #[test]
    fn per_condition_thresholds() {
        let m = AttentionModel::published();
        let t = m.threshold(AttentionLevel::Low, ecc(7.0));
        assert!((t.value - 0.02997).abs() < 5e-6, "{}", t.value);
        assert!(!t.extrapolated);
        let t = m.threshold(AttentionLevel::Medium, ecc(14.0)).value;
        assert!((t - 0.08621).abs() < 5e-6, "{t}");
        let at_zero = m.threshold(AttentionLevel::High, ecc(0.0));
        assert_eq!(at_zero.value, m.high.p1);
        assert!(at_zero.extrapolated);
    }

    #[test]
    fn extrapolation_is_flagged_not_rejected() {
        let m = AttentionModel::published();
        assert!(m.threshold(AttentionLevel::Low, ecc(30.0)).extrapolated);
        assert!(m.gain(AttentionLevel::High, ecc(30.0)).unwrap().extrapolated);
        assert!(!m.gain(AttentionLevel::High, ecc(21.0)).unwrap().extrapolated);
        assert!(Eccentricity::new(-1.0).is_err());
    }

    #[test]
    fn gains() {
        let m = AttentionModel::published();
        for e in [0.0, 7.0, 15.0, 40.0] {
            assert_eq!(m.gain(AttentionLevel::Low, ecc(e)).unwrap().value, 1.0);
        }
        let g = m.gain(AttentionLevel::Medium, ecc(7.0)).unwrap().value;
        assert!((g - 1.876).abs() < 5e-4, "{g}");
        let g = m.gain(AttentionLevel::Medium, ecc(21.0)).unwrap().value;
        assert!((g - 3.430).abs() < 5e-4, "{g}");
        let g = m.gain(AttentionLevel::High, ecc(21.0)).unwrap().value;
        assert!((g - 4.412).abs() < 5e-4, "{g}");
    }

    #[test]
    fn gain_division_guard() {
        let mut m = AttentionModel::published();
        m.low.p1 = -1.0;
        assert!(matches!(
            m.gain(AttentionLevel::High, ecc(10.0)),
            Err(Error::DivisionGuard(_))
        ));
    }

    #[test]
    fn sensitivity_scaling() {
        let m = AttentionModel::published();
        let base = Constant(100.0);
        let s = scale_sensitivity(&base, &m, AttentionLevel::Low, &query(15.0)).unwrap();
        assert_eq!(s, 100.0);
        let s = scale_sensitivity(&base, &m, AttentionLevel::Medium, &query(21.0)).unwrap();
        assert!((s - 29.15).abs() < 0.005, "{s}");
        let s = scale_sensitivity(&base, &m, AttentionLevel::High, &query(21.0)).unwrap();
        assert!((s - 22.665).abs() < 0.001, "{s}");
        let err = scale_sensitivity(&Failing, &m, AttentionLevel::High, &query(21.0)).unwrap_err();
        assert!(matches!(err, Error::Domain { what: "spatial frequency", .. }));
    }

    #[test]
    fn unified_thresholds() {
        let u = UnifiedModel::published();
        assert!((u.threshold(ecc(7.0), 0.0).unwrap().value - 0.0285).abs() < 1e-12);
        assert!((u.threshold(ecc(7.0), 1.0).unwrap().value - 0.0844).abs() < 1e-12);
        let t = u.threshold(ecc(21.0), 1.0).unwrap().value;
        assert!((t - 0.14386).abs() < 5e-6, "{t}");
        assert!(u.threshold(ecc(10.0), 1.5).is_err());
        assert!(u.threshold(ecc(10.0), -0.1).is_err());
    }

    #[test]
    fn interpolation_endpoints() {
        assert_eq!(interpolate(0.3, 0.7, 0.0), 0.3);
        assert_eq!(interpolate(0.3, 0.7, 1.0), 0.7);
    }

    #[test]
    fn unified_rejects_bad_parameters() {
        assert!(UnifiedModel::new(0.1, 0.1, 0.1, 0.1, 0.0).is_err());
        let mut u = UnifiedModel::published();
        u.gamma_s = 0.6;
        assert!(u.validate().is_err());
    }

    #[test]
    fn cortical_magnification_values() {
        let cm = CorticalMagnification::default();
        assert!((cm.magnification(ecc(0.0)) - 7.9564).abs() < 5e-5);
        assert!((cm.magnification(ecc(21.0)) - 1.18362).abs() < 5e-6);
        assert!(cm.magnification(ecc(1e9)) < 1e-7);
    }

    #[test]
    fn stimulus_scaling_matches_table() {
        let cm = CorticalMagnification::default();
        let r = StimulusReference::study_default();
        let s7 = cm.scale_stimulus(&r, ecc(7.0));
        assert!((s7.frequency - 4.62).abs() < 0.01 && (s7.diameter - 2.16).abs() < 0.01);
        let s14 = cm.scale_stimulus(&r, ecc(14.0));
        assert!((s14.frequency - 2.79).abs() < 0.01 && (s14.diameter - 3.58).abs() < 0.01);
        let s21 = cm.scale_stimulus(&r, ecc(21.0));
        assert_eq!((s21.frequency, s21.diameter), (2.0, 5.0));
    }

    #[test]
    fn surrogate_is_calibrated_on_scaled_stimuli() {
        let csf = CorticalSurrogateCsf::default();
        let cm = CorticalMagnification::default();
        let r = StimulusReference::study_default();
        let mut sens = vec![];
        for e in [7.0, 14.0, 21.0] {
            let s = cm.scale_stimulus(&r, ecc(e));
            sens.push(
                csf.sensitivity(&CsfQuery {
                    spatial_frequency: s.frequency,
                    eccentricity: ecc(e),
                    luminance: 28.0,
                    area: 1.0,
                })
                .unwrap(),
            );
        }
        for s in &sens {
            assert!((1.0 / s - 0.030933).abs() < 1e-5, "{}", 1.0 / s);
        }
        let q = CsfQuery {
            spatial_frequency: 100.0,
            ..query(10.0)
        };
        assert!(csf.sensitivity(&q).is_err());
    }
}
