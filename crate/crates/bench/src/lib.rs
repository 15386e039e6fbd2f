//! Shared fixtures for the benchmarks.

use attnfov::fit::{samples_from_cells, ThresholdSample};
use attnfov::reference_data::main_study_cells;
use attnfov::scenes::{scene, scene_geometry};
use attnfov::{DisplayGeometry, LuminanceImage};

/// A built-in scene with the geometry it was rendered for.
pub fn scene_fixture(name: &str) -> (LuminanceImage, DisplayGeometry) {
    let img = scene(name).unwrap_or_else(|| panic!("no scene named {name}"));
    (img, scene_geometry())
}

/// Cell means replicated `subjects` times with a small deterministic
/// per-subject offset.
pub fn threshold_samples(subjects: usize) -> Vec<ThresholdSample> {
    let base = samples_from_cells(&main_study_cells());
    (0..subjects)
        .flat_map(|k| {
            let scale = 1.0 + 0.02 * ((k as f64 * 0.7).sin());
            base.iter().map(move |s| ThresholdSample {
                subject_id: format!("s{k:03}"),
                contrast: s.contrast * scale,
                ..s.clone()
            })
        })
        .collect()
}
