//! Least-squares fitting of the threshold models, outlier screening and
//! per-subject baseline adjustment.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::attention::AttentionLevel;
use crate::csf::{AttentionModel, Eccentricity, ThresholdModel, UnifiedModel};
use crate::error::{Error, Result};

/// One measured threshold. Field names double as the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSample {
    #[serde(rename = "subject")]
    pub subject_id: String,
    #[serde(rename = "eccentricity_deg")]
    pub eccentricity: f64,
    pub attention: AttentionLevel,
    pub contrast: f64,
    pub repetition: u32,
}

impl ThresholdSample {
    pub fn new(
        subject_id: impl Into<String>,
        eccentricity: f64,
        attention: AttentionLevel,
        contrast: f64,
        repetition: u32,
    ) -> Self {
        Self {
            subject_id: subject_id.into(),
            eccentricity,
            attention,
            contrast,
            repetition,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return Err(Error::domain("threshold contrast", self.contrast, "(0, 1]"));
        }
        if !(self.eccentricity > 0.0 && self.eccentricity.is_finite()) {
            return Err(Error::domain("eccentricity", self.eccentricity, "> 0"));
        }
        Ok(())
    }
}

/// Builds one sample per cell, e.g. from a table of published means.
pub fn samples_from_cells(cells: &[(f64, AttentionLevel, f64)]) -> Vec<ThresholdSample> {
    cells
        .iter()
        .map(|&(e, a, t)| ThresholdSample::new("mean", e, a, t, 0))
        .collect()
}

pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<ThresholdSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let s: ThresholdSample = row?;
        s.validate()?;
        out.push(s);
    }
    Ok(out)
}

pub fn write_samples_csv<W: Write>(writer: W, samples: &[ThresholdSample]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in samples {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

/// How samples enter the least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// One point per (eccentricity, attention) cell at the cell mean.
    #[default]
    CellMeans,
    /// Every sample is a point.
    PerSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<P> {
    pub parameters: P,
    pub r_squared: f64,
    pub dof_adjusted_r_squared: f64,
    /// Number of points the fit was computed on (cells or samples).
    pub points: usize,
    pub residual_sum_of_squares: f64,
    /// `contrast − prediction` for each input sample, in input order.
    pub residuals: Vec<f64>,
}

fn r_squared(observed: &[f64], predicted: &[f64]) -> (f64, f64) {
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let tss: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let rss: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    let r2 = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss == 0.0 {
        1.0
    } else {
        0.0
    };
    (r2, rss)
}

/// `1 − (1 − R²)(n − 1)/(n − p − 1)` for `p` fitted parameters; NaN when
/// there are no residual degrees of freedom.
pub fn adjusted_r_squared(r2: f64, points: usize, parameters: usize) -> f64 {
    let n = points as f64;
    let p = parameters as f64;
    if n - p - 1.0 <= 0.0 {
        return f64::NAN;
    }
    1.0 - (1.0 - r2) * (n - 1.0) / (n - p - 1.0)
}

fn ecc_key(e: f64) -> u64 {
    e.to_bits()
}

/// Groups values by key preserving first-seen key order and returns
/// `(key, mean)`.
fn cell_means<K: Ord + Copy>(items: impl Iterator<Item = (K, f64)>) -> Vec<(K, f64)> {
    let mut sums: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for (k, v) in items {
        let entry = sums.entry(k).or_insert((0.0, 0));
        entry.0 += v;
        entry.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Fits `t = p0·√e + p1` to the samples of one attention level by ordinary
/// least squares.
pub fn fit_per_condition(
    samples: &[ThresholdSample],
    attention: AttentionLevel,
    weighting: Weighting,
) -> Result<FitReport<ThresholdModel>> {
    let selected: Vec<&ThresholdSample> = samples.iter().filter(|s| s.attention == attention).collect();
    for s in &selected {
        s.validate()?;
    }
    let points: Vec<(f64, f64)> = match weighting {
        Weighting::CellMeans => cell_means(selected.iter().map(|s| (ecc_key(s.eccentricity), s.contrast)))
            .into_iter()
            .map(|(k, t)| (f64::from_bits(k), t))
            .collect(),
        Weighting::PerSample => selected.iter().map(|s| (s.eccentricity, s.contrast)).collect(),
    };
    let distinct = cell_means(points.iter().map(|&(e, _)| (ecc_key(e), 0.0))).len();
    if distinct < 2 {
        return Err(Error::RankDeficient(format!(
            "{attention}: need at least two distinct eccentricities, found {distinct}"
        )));
    }

    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(e, _)| e.sqrt()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, t)| t).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let p0 = sxy / sxx;
    let p1 = y_mean - p0 * x_mean;
    let model = ThresholdModel::new(attention, p0, p1);

    let predicted: Vec<f64> = xs.iter().map(|x| p0 * x + p1).collect();
    let (r2, rss) = r_squared(&ys, &predicted);
    let residuals = selected
        .iter()
        .map(|s| s.contrast - (p0 * s.eccentricity.sqrt() + p1))
        .collect();
    Ok(FitReport {
        parameters: model,
        r_squared: r2,
        dof_adjusted_r_squared: adjusted_r_squared(r2, points.len(), 1),
        points: points.len(),
        residual_sum_of_squares: rss,
        residuals,
    })
}

/// Fits all three attention levels and assembles the gain model.
pub fn fit_attention_model(
    samples: &[ThresholdSample],
    weighting: Weighting,
) -> Result<(AttentionModel, [FitReport<ThresholdModel>; 3])> {
    let low = fit_per_condition(samples, AttentionLevel::Low, weighting)?;
    let medium = fit_per_condition(samples, AttentionLevel::Medium, weighting)?;
    let high = fit_per_condition(samples, AttentionLevel::High, weighting)?;
    let model = AttentionModel::new(low.parameters, medium.parameters, high.parameters)?;
    Ok((model, [low, medium, high]))
}

/// Settings for the γ_i profile search of [`fit_unified`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnifiedFitOptions {
    pub weighting: Weighting,
    /// Upper end of the γ_i search interval `(0, max]`.
    pub gamma_max: f64,
    pub grid_step: f64,
    pub tolerance: f64,
}

impl Default for UnifiedFitOptions {
    fn default() -> Self {
        Self {
            weighting: Weighting::CellMeans,
            gamma_max: 3.0,
            grid_step: 0.01,
            tolerance: 1e-4,
        }
    }
}

struct UnifiedPoints {
    sqrt_offset: Vec<f64>,
    a_c: Vec<f64>,
    t: Vec<f64>,
}

impl UnifiedPoints {
    fn design(&self, gamma_i: f64) -> DMatrix<f64> {
        let n = self.t.len();
        DMatrix::from_fn(n, 4, |r, c| {
            let d = self.sqrt_offset[r];
            let ws = self.a_c[r].powf(UnifiedModel::GAMMA_S);
            let wi = self.a_c[r].powf(gamma_i);
            match c {
                0 => (1.0 - ws) * d,
                1 => ws * d,
                2 => 1.0 - wi,
                _ => wi,
            }
        })
    }

    /// Inner linear least squares for fixed γ_i: returns `(s0, s1, i0, i1)`
    /// and the residual sum of squares.
    fn solve(&self, gamma_i: f64) -> Result<([f64; 4], f64)> {
        let a = self.design(gamma_i);
        let b = DVector::from_column_slice(&self.t);
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smax > 0.0) || smin <= smax * 1e-10 {
            return Err(Error::FitFailure(format!(
                "singular inner system at gamma_i = {gamma_i} (condition {:e})",
                smax / smin
            )));
        }
        let x = svd
            .solve(&b, 0.0)
            .map_err(|e| Error::FitFailure(e.to_string()))?;
        let r = &a * &x - &b;
        Ok(([x[0], x[1], x[2], x[3]], r.norm_squared()))
    }
}

fn golden_section(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Fits the unified model with γ_s fixed at 0.5.
///
/// Given γ_i the model is linear in `(s0, s1, i0, i1)`, so γ_i is profiled:
/// a grid over `(0, gamma_max]` brackets the minimum and golden-section search
/// refines it. The adjusted R² counts five fitted parameters.
pub fn fit_unified(samples: &[ThresholdSample], options: UnifiedFitOptions) -> Result<FitReport<UnifiedModel>> {
    for s in samples {
        s.validate()?;
    }
    let levels: std::collections::BTreeSet<_> = samples.iter().map(|s| s.attention).collect();
    let eccs: std::collections::BTreeSet<_> = samples.iter().map(|s| ecc_key(s.eccentricity)).collect();
    if levels.len() < 2 || eccs.len() < 2 {
        return Err(Error::FitFailure(format!(
            "need at least two attention levels and two eccentricities (got {} and {})",
            levels.len(),
            eccs.len()
        )));
    }

    let rows: Vec<(f64, f64, f64)> = match options.weighting {
        Weighting::CellMeans => cell_means(
            samples
                .iter()
                .map(|s| ((ecc_key(s.eccentricity), s.attention), s.contrast)),
        )
        .into_iter()
        .map(|((k, a), t)| (f64::from_bits(k), a.as_continuous(), t))
        .collect(),
        Weighting::PerSample => samples
            .iter()
            .map(|s| (s.eccentricity, s.attention.as_continuous(), s.contrast))
            .collect(),
    };
    let sqrt7 = crate::csf::MEASURED_MIN_DEG.sqrt();
    let pts = UnifiedPoints {
        sqrt_offset: rows.iter().map(|r| r.0.sqrt() - sqrt7).collect(),
        a_c: rows.iter().map(|r| r.1).collect(),
        t: rows.iter().map(|r| r.2).collect(),
    };

    let steps = (options.gamma_max / options.grid_step).round() as usize;
    let grid: Vec<f64> = (1..=steps).map(|i| i as f64 * options.grid_step).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, &g) in grid.iter().enumerate() {
        let (_, rss) = pts.solve(g)?;
        if best.map_or(true, |(_, b)| rss < b) {
            best = Some((i, rss));
        }
    }
    let (bi, _) = best.expect("non-empty grid");
    let lo = if bi == 0 { options.grid_step * 1e-3 } else { grid[bi - 1] };
    let hi = grid[(bi + 1).min(grid.len() - 1)];
    let rss_at = |g: f64| pts.solve(g).map(|(_, r)| r).unwrap_or(f64::INFINITY);
    let gamma_i = golden_section(lo, hi, options.tolerance, rss_at);

    let (coef, _) = pts.solve(gamma_i)?;
    let model = UnifiedModel {
        s0: coef[0],
        s1: coef[1],
        i0: coef[2],
        i1: coef[3],
        gamma_s: UnifiedModel::GAMMA_S,
        gamma_i,
    };
    model
        .validate()
        .map_err(|e| Error::FitFailure(format!("fitted parameters are not admissible: {e}")))?;

    let predict = |e: f64, a: f64| {
        model
            .threshold(Eccentricity::new(e).expect("validated eccentricity"), a)
            .expect("a_c in [0, 1]")
            .value
    };
    let predicted: Vec<f64> = rows.iter().map(|r| predict(r.0, r.1)).collect();
    let (r2, rss) = r_squared(&pts.t, &predicted);
    let residuals = samples
        .iter()
        .map(|s| s.contrast - predict(s.eccentricity, s.attention.as_continuous()))
        .collect();
    Ok(FitReport {
        parameters: model,
        r_squared: r2,
        dof_adjusted_r_squared: adjusted_r_squared(r2, rows.len(), 5),
        points: rows.len(),
        residual_sum_of_squares: rss,
        residuals,
    })
}

/// Residual sum of squares of the unified model with all but γ_i profiled
/// out. Exposed for diagnostics and tests of the profile search.
pub fn unified_profile_rss(samples: &[ThresholdSample], gamma_i: f64) -> Result<f64> {
    let sqrt7 = crate::csf::MEASURED_MIN_DEG.sqrt();
    let rows = cell_means(
        samples
            .iter()
            .map(|s| ((ecc_key(s.eccentricity), s.attention), s.contrast)),
    );
    let pts = UnifiedPoints {
        sqrt_offset: rows.iter().map(|((k, _), _)| f64::from_bits(*k).sqrt() - sqrt7).collect(),
        a_c: rows.iter().map(|((_, a), _)| a.as_continuous()).collect(),
        t: rows.iter().map(|(_, t)| *t).collect(),
    };
    pts.solve(gamma_i).map(|(_, rss)| rss)
}

/// Result of interquartile-range screening; indices refer to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierPartition {
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Removes values lying strictly more than `k` interquartile ranges outside
/// the quartiles.
///
/// When the IQR is zero the fences collapse onto the quartiles, so any value
/// that differs from them is removed while ties are kept.
pub fn detect_outliers_iqr(values: &[f64], k: f64) -> Result<OutlierPartition> {
    if values.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "IQR screening needs at least 4 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite value in IQR screening".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - k * iqr, q3 + k * iqr);
    let (kept, removed) = (0..values.len()).partition(|&i| values[i] >= lo && values[i] <= hi);
    Ok(OutlierPartition {
        kept,
        removed,
        q1,
        q3,
        iqr,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineAdjustment {
    pub samples: Vec<ThresholdSample>,
    /// Multiplicative factor applied to each subject.
    pub factors: BTreeMap<String, f64>,
}

/// Rescales every subject so that their mean low-attention threshold equals
/// `baseline_prediction`. Within-subject ratios are preserved.
pub fn baseline_adjust(samples: &[ThresholdSample], baseline_prediction: f64) -> Result<BaselineAdjustment> {
    if !(baseline_prediction > 0.0 && baseline_prediction.is_finite()) {
        return Err(Error::domain("baseline prediction", baseline_prediction, "> 0"));
    }
    let lows = cell_means(
        samples
            .iter()
            .filter(|s| s.attention == AttentionLevel::Low)
            .map(|s| (s.subject_id.as_str(), s.contrast)),
    );
    let lows: BTreeMap<&str, f64> = lows.into_iter().collect();
    let mut factors = BTreeMap::new();
    let mut adjusted = Vec::with_capacity(samples.len());
    for s in samples {
        let low = lows
            .get(s.subject_id.as_str())
            .ok_or_else(|| Error::MissingBaseline(s.subject_id.clone()))?;
        let f = baseline_prediction / low;
        factors.insert(s.subject_id.clone(), f);
        adjusted.push(ThresholdSample {
            contrast: s.contrast * f,
            ..s.clone()
        });
    }
    Ok(BaselineAdjustment {
        samples: adjusted,
        factors,
    })
}
