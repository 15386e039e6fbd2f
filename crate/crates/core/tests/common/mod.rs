//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use attnfov::foveation::{blur_sigma, FoveationConfig, MarModel};
use attnfov::{DisplayGeometry, LuminanceImage};

/// Direct 2-D Gaussian gather with clamp-to-edge borders, using each output
/// pixel's own σ. No separability or pyramid shortcuts.
pub fn exact_foveation(
    img: &LuminanceImage,
    geom: &DisplayGeometry,
    model: &MarModel,
    cfg: &FoveationConfig,
) -> LuminanceImage {
    let (gx, gy) = cfg
        .gaze_center
        .unwrap_or(((img.width as f64 - 1.0) / 2.0, (img.height as f64 - 1.0) / 2.0));
    let mut out = img.clone();
    for y in 0..img.height {
        for x in 0..img.width {
            let r = (x as f64 - gx).hypot(y as f64 - gy);
            let e = (geom.pixel_pitch * r / (geom.viewing_distance / geom.lens_magnification))
                .atan()
                .to_degrees();
            let s = blur_sigma(model, cfg, e);
            if s == 0.0 {
                continue;
            }
            let rad = (4.0 * s).ceil() as isize;
            let (mut acc, mut norm) = (0.0, 0.0);
            for dy in -rad..=rad {
                for dx in -rad..=rad {
                    let w = (-((dx * dx + dy * dy) as f64) / (2.0 * s * s)).exp();
                    let sx = (x as isize + dx).clamp(0, img.width as isize - 1) as usize;
                    let sy = (y as isize + dy).clamp(0, img.height as isize - 1) as usize;
                    acc += w * img.get(sx, sy);
                    norm += w;
                }
            }
            out.set(x, y, acc / norm);
        }
    }
    out
}

/// `rms(a − oracle) / rms(oracle − mean(oracle))`.
pub fn relative_rms(a: &LuminanceImage, oracle: &LuminanceImage) -> f64 {
    let mean = oracle.mean();
    let n = oracle.samples.len() as f64;
    let err: f64 = a.samples.iter().zip(&oracle.samples).map(|(x, o)| (x - o).powi(2)).sum::<f64>() / n;
    let sig: f64 = oracle.samples.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / n;
    (err / sig).sqrt()
}

/// Deterministic 128×128 fixtures: white noise, a checkerboard, a radial
/// chirp, and a single bright impulse.
pub fn foveation_fixtures() -> Vec<(&'static str, LuminanceImage)> {
    let n = 128;
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let noise = LuminanceImage::from_fn(n, n, |_, _| 5.0 + 50.0 * next());
    let checker = LuminanceImage::from_fn(n, n, |x, y| if (x / 4 + y / 4) % 2 == 0 { 10.0 } else { 60.0 });
    let chirp = LuminanceImage::from_fn(n, n, |x, y| {
        let r = (x as f64 - 63.5).hypot(y as f64 - 63.5);
        30.0 + 20.0 * (r * r / 60.0).cos()
    });
    let mut impulse = LuminanceImage::filled(n, n, 10.0);
    impulse.set(100, 90, 1000.0);
    vec![("noise", noise), ("checker", checker), ("chirp", chirp), ("impulse", impulse)]
}

/// 128×128 display patch whose gaze sits at the top-left corner so that
/// eccentricity spans the whole image diagonal.
pub fn fixture_geometry() -> DisplayGeometry {
    DisplayGeometry::study_default().with_resolution(128, 128)
}
