//! Published measurements and fitted parameters used as defaults and
//! fixtures.

use crate::attention::AttentionLevel;
use crate::csf::{AttentionModel, ThresholdModel, UnifiedModel};

/// Per-condition threshold model fit (low, medium, high).
pub const PUBLISHED_ATTENTION_MODEL: AttentionModel = AttentionModel {
    low: ThresholdModel {
        p0: 9.672e-4,
        p1: 2.741e-2,
        attention: AttentionLevel::Low,
    },
    medium: ThresholdModel {
        p0: 2.737e-2,
        p1: -1.620e-2,
        attention: AttentionLevel::Medium,
    },
    high: ThresholdModel {
        p0: 2.714e-2,
        p1: 1.612e-2,
        attention: AttentionLevel::High,
    },
};

/// Coefficients of determination reported with the per-condition fit.
pub const PUBLISHED_R_SQUARED: [f64; 3] = [0.705, 1.000, 0.956];

pub const PUBLISHED_UNIFIED_MODEL: UnifiedModel = UnifiedModel {
    s0: 0.00243,
    s1: 0.0307,
    i0: 0.0285,
    i1: 0.0844,
    gamma_s: 0.5,
    gamma_i: 0.771,
};

pub const PUBLISHED_UNIFIED_ADJUSTED_R_SQUARED: f64 = 0.973;

/// Gabor stimulus parameters: number, eccentricity (deg), diameter (deg),
/// spatial frequency (cpd), adaptation luminance (cd/m²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StimulusRow {
    pub number: u32,
    pub eccentricity: f64,
    pub diameter: f64,
    pub frequency: f64,
    pub adaptation_luminance: f64,
}

pub const STIMULI: [StimulusRow; 7] = [
    StimulusRow { number: 1, eccentricity: 7.0, diameter: 2.16, frequency: 4.62, adaptation_luminance: 28.0 },
    StimulusRow { number: 2, eccentricity: 14.0, diameter: 3.58, frequency: 2.79, adaptation_luminance: 28.0 },
    StimulusRow { number: 3, eccentricity: 21.0, diameter: 5.0, frequency: 2.0, adaptation_luminance: 28.0 },
    StimulusRow { number: 4, eccentricity: 9.25, diameter: 1.7, frequency: 2.0, adaptation_luminance: 28.0 },
    StimulusRow { number: 5, eccentricity: 15.0, diameter: 5.0, frequency: 4.0, adaptation_luminance: 28.0 },
    StimulusRow { number: 6, eccentricity: 15.0, diameter: 5.0, frequency: 4.0, adaptation_luminance: 58.0 },
    StimulusRow { number: 7, eccentricity: 15.0, diameter: 5.0, frequency: 4.0, adaptation_luminance: 116.0 },
];

pub fn stimulus(number: u32) -> Option<&'static StimulusRow> {
    STIMULI.iter().find(|s| s.number == number)
}

/// Mean thresholds `[low, medium, high]` for stimuli 1–3 (7°, 14°, 21°).
pub const MAIN_STUDY_THRESHOLDS: [[f64; 3]; 3] = [
    [0.0297, 0.0561, 0.0851],
    [0.0317, 0.0864, 0.1242],
    [0.0314, 0.1091, 0.1368],
];

/// Mean thresholds `[low, medium, high]` for validation stimuli 4–7.
pub const VALIDATION_THRESHOLDS: [[f64; 3]; 4] = [
    [0.0325, 0.0607, 0.0905],
    [0.0452, 0.1304, 0.1806],
    [0.0573, 0.1415, 0.1926],
    [0.0508, 0.1059, 0.1832],
];

pub const MAIN_STUDY_ECCENTRICITIES: [f64; 3] = [7.0, 14.0, 21.0];

/// Mean measured MAR slopes per image `[low, medium, high]`.
pub const MAR_SLOPES: [(&str, [f64; 3]); 4] = [
    ("tulips", [0.0222, 0.0499, 0.0651]),
    ("city", [0.0153, 0.0449, 0.0623]),
    ("mountain", [0.0221, 0.0369, 0.0581]),
    ("forest", [0.0197, 0.0361, 0.0531]),
];

/// Global mean MAR slopes `[low, medium, high]`.
pub const MEAN_MAR_SLOPES: [f64; 3] = [0.0198, 0.0420, 0.0596];

pub fn mean_mar_slope(attention: AttentionLevel) -> f64 {
    MEAN_MAR_SLOPES[attention as usize]
}

/// Cell means of the main study as `(eccentricity, attention, threshold)`.
pub fn main_study_cells() -> Vec<(f64, AttentionLevel, f64)> {
    let mut out = Vec::with_capacity(9);
    for (row, e) in MAIN_STUDY_THRESHOLDS.iter().zip(MAIN_STUDY_ECCENTRICITIES) {
        for (t, a) in row.iter().zip(AttentionLevel::ALL) {
            out.push((e, a, *t));
        }
    }
    out
}
