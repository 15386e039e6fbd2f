//! Sampling-density savings of foveation over a field of view.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foveation::MarModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayProfile {
    /// Field of view `(width, height)`, degrees.
    pub fov: (f64, f64),
    pub ppd: f64,
    /// Overrides the peak MAR `2/ppd`.
    #[serde(default)]
    pub omega_s: Option<f64>,
}

impl DisplayProfile {
    pub fn new(fov: (f64, f64), ppd: f64) -> Self {
        Self { fov, ppd, omega_s: None }
    }

    pub fn square(fov: f64, ppd: f64) -> Self {
        Self::new((fov, fov), ppd)
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s.unwrap_or(2.0 / self.ppd)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fov.0 > 0.0 && self.fov.1 > 0.0) {
            return Err(Error::InvalidParameter(format!("field of view {:?} must be positive", self.fov)));
        }
        if !(self.ppd > 0.0) {
            return Err(Error::domain("pixels per degree", self.ppd, "> 0"));
        }
        if !(self.omega_s() > 0.0) {
            return Err(Error::domain("omega_s", self.omega_s(), "> 0"));
        }
        Ok(())
    }
}

/// Convergence policy for [`computational_gain_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub initial_cells: usize,
    /// Relative change between successive doublings that ends refinement.
    pub tolerance: f64,
    pub max_refinements: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            initial_cells: 16,
            tolerance: 1e-3,
            max_refinements: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub psi: f64,
    /// Cells per axis of the final grid on one quadrant.
    pub cells: usize,
    /// Relative change from the previous grid.
    pub last_change: f64,
}

/// Mean of `max(ω/ω_s, 1)^−2` over one quadrant of the field of view using
/// an `n × n` midpoint grid in angular coordinates.
fn mean_density(profile: &DisplayProfile, model: &MarModel, n: usize) -> f64 {
    let (hw, hh) = (profile.fov.0 / 2.0, profile.fov.1 / 2.0);
    let (dx, dy) = (hw / n as f64, hh / n as f64);
    let omega_s = profile.omega_s();
    let sum: f64 = (0..n)
        .into_par_iter()
        .map(|j| {
            let y = (j as f64 + 0.5) * dy;
            let mut row = 0.0;
            for i in 0..n {
                let x = (i as f64 + 0.5) * dx;
                let r = (model.mar(x.hypot(y)) / omega_s).max(1.0);
                row += 1.0 / (r * r);
            }
            row
        })
        .sum();
    sum / (n * n) as f64
}

/// Ψ on a fixed `n × n` midpoint grid per quadrant, without refinement.
pub fn computational_gain_on_grid(profile: &DisplayProfile, model: &MarModel, n: usize) -> Result<f64> {
    profile.validate()?;
    model.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("quadrature grid needs at least one cell".into()));
    }
    Ok(1.0 / mean_density(profile, model, n))
}

/// Ψ = area / ∫ max(ω(e)/ω_s, 1)^−2 over the field of view, gaze at the
/// centre. Refines the grid by doubling until two successive doublings each
/// change Ψ by less than 0.1 %.
pub fn computational_gain(profile: &DisplayProfile, model: &MarModel) -> Result<f64> {
    computational_gain_with(profile, model, &Quadrature::default()).map(|g| g.psi)
}

pub fn computational_gain_with(profile: &DisplayProfile, model: &MarModel, q: &Quadrature) -> Result<GainEstimate> {
    profile.validate()?;
    model.validate()?;
    let mut n = q.initial_cells.max(1);
    let mut prev = 1.0 / mean_density(profile, model, n);
    let mut change = f64::INFINITY;
    let mut settled = false;
    for _ in 0..q.max_refinements {
        n *= 2;
        let psi = 1.0 / mean_density(profile, model, n);
        change = ((psi - prev) / psi).abs();
        // Two quiet doublings in a row: the kink where ω crosses ω_s makes a
        // single small change unreliable.
        if change < q.tolerance && settled {
            return Ok(GainEstimate {
                psi,
                cells: n,
                last_change: change,
            });
        }
        settled = change < q.tolerance;
        prev = psi;
    }
    Err(Error::NonConvergence {
        refinements: q.max_refinements,
        last_change: change,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fov_deg: f64,
    pub ppd: f64,
    pub condition: String,
    pub slope: f64,
    pub psi: f64,
    /// Fraction of full-resolution samples retained, `1/Ψ`.
    pub retained: f64,
}

/// Ψ on square fields of view for every combination of size, density and
/// named MAR model.
pub fn gain_sweep(fovs: &[f64], ppds: &[f64], models: &[(String, MarModel)]) -> Result<Vec<SweepRow>> {
    gain_sweep_with(fovs, ppds, models, None)
}

/// [`gain_sweep`] with an explicit sampling limit `ω_s` instead of `2/ppd`.
pub fn gain_sweep_with(
    fovs: &[f64],
    ppds: &[f64],
    models: &[(String, MarModel)],
    omega_s: Option<f64>,
) -> Result<Vec<SweepRow>> {
    if fovs.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("field-of-view range must be non-decreasing".into()));
    }
    let mut points = Vec::new();
    for &ppd in ppds {
        for (name, model) in models {
            for &fov in fovs {
                points.push((fov, ppd, name.clone(), *model));
            }
        }
    }
    points
        .into_par_iter()
        .map(|(fov, ppd, condition, model)| {
            let profile = DisplayProfile {
                omega_s,
                ..DisplayProfile::square(fov, ppd)
            };
            let psi = computational_gain(&profile, &model)?;
            Ok(SweepRow {
                fov_deg: fov,
                ppd,
                condition,
                slope: model.slope,
                psi,
                retained: 1.0 / psi,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
