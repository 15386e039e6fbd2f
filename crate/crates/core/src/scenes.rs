//! Procedural test scenes standing in for photographic content.
//!
//! Each scene covers 46°×20° at 12 pixels per degree and mixes smooth
//! regions with textured, high-contrast detail so that peripheral blur has a
//! measurable cost.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::stimulus::{DisplayGeometry, LuminanceImage};

pub const SCENE_NAMES: [&str; 4] = ["tulips", "city", "mountain", "forest"];

/// Display the scenes are rendered for.
pub fn scene_geometry() -> DisplayGeometry {
    DisplayGeometry::with_ppd(12.0, 0.94, (46.0, 20.0))
}

/// Smooth lattice noise in `[0, 1]`.
struct ValueNoise {
    cells: usize,
    values: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, cells: usize) -> Self {
        Self {
            cells,
            values: (0..cells * cells).map(|_| rng.random::<f64>()).collect(),
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let n = self.cells;
        let (xf, yf) = (x.rem_euclid(n as f64), y.rem_euclid(n as f64));
        let (x0, y0) = (xf.floor() as usize % n, yf.floor() as usize % n);
        let (x1, y1) = ((x0 + 1) % n, (y0 + 1) % n);
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (s(xf.fract()), s(yf.fract()));
        let v = |i: usize, j: usize| self.values[j * n + i];
        let top = v(x0, y0) + (v(x1, y0) - v(x0, y0)) * tx;
        let bot = v(x0, y1) + (v(x1, y1) - v(x0, y1)) * tx;
        top + (bot - top) * ty
    }

    /// Sum of `octaves` layers, each twice the frequency and half the
    /// amplitude of the previous, normalised to `[0, 1]`.
    fn fbm(&self, x: f64, y: f64, octaves: usize) -> f64 {
        let (mut sum, mut amp, mut norm, mut f) = (0.0, 1.0, 0.0, 1.0);
        for o in 0..octaves {
            sum += amp * self.at(x * f + o as f64 * 17.3, y * f + o as f64 * 5.1);
            norm += amp;
            amp *= 0.5;
            f *= 2.0;
        }
        sum / norm
    }
}

fn size() -> (usize, usize) {
    let g = scene_geometry();
    (g.resolution.0 as usize, g.resolution.1 as usize)
}

fn tulips() -> LuminanceImage {
    let (w, h) = size();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e11);
    let noise = ValueNoise::new(&mut rng, 64);
    let flowers: Vec<(f64, f64, f64, f64)> = (0..420)
        .map(|_| {
            let x = rng.random_range(0.0..w as f64);
            let y = rng.random_range(0.35 * h as f64..h as f64);
            let r = 1.5 + 4.0 * (y / h as f64);
            (x, y, r, rng.random_range(25.0..85.0))
        })
        .collect();
    let mut img = LuminanceImage::from_fn(w, h, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        if fy < 0.35 * h as f64 {
            40.0 + 25.0 * (1.0 - fy / h as f64) + 8.0 * noise.fbm(fx / 40.0, fy / 40.0, 3)
        } else {
            let stems = 0.5 + 0.5 * (fx * 0.9 + 3.0 * noise.at(fx / 9.0, fy / 9.0)).sin();
            12.0 + 14.0 * stems * noise.fbm(fx / 6.0, fy / 6.0, 4)
        }
    });
    for (cx, cy, r, l) in flowers {
        let rr = r.ceil() as isize;
        for dy in -rr..=rr {
            for dx in -rr..=rr {
                let (x, y) = (cx as isize + dx, cy as isize + dy);
                if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                    continue;
                }
                if ((dx * dx + dy * dy) as f64) <= r * r {
                    img.set(x as usize, y as usize, l);
                }
            }
        }
    }
    img
}

fn city() -> LuminanceImage {
    let (w, h) = size();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc17);
    let mut skyline = vec![0usize; w];
    let mut shade = vec![0.0; w];
    let mut x = 0;
    while x < w {
        let bw = rng.random_range(14..48);
        let top = rng.random_range(h / 8..h / 2);
        let l = rng.random_range(10.0..45.0);
        for i in x..(x + bw).min(w) {
            skyline[i] = top;
            shade[i] = l;
        }
        x += bw;
    }
    LuminanceImage::from_fn(w, h, |x, y| {
        if y < skyline[x] {
            70.0 - 20.0 * y as f64 / h as f64
        } else {
            let win = (x % 7 < 3) && (y % 9 < 4);
            if win {
                shade[x] + 35.0
            } else {
                shade[x]
            }
        }
    })
}

fn mountain() -> LuminanceImage {
    let (w, h) = size();
    let mut rng = ChaCha8Rng::seed_from_u64(0x3a7);
    let noise = ValueNoise::new(&mut rng, 64);
    LuminanceImage::from_fn(w, h, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let ridge = h as f64 * (0.3 + 0.35 * noise.fbm(fx / 90.0, 3.0, 6));
        if fy < ridge {
            55.0 + 20.0 * (fy / ridge)
        } else {
            let depth = (fy - ridge) / (h as f64 - ridge + 1.0);
            let snow = if depth < 0.15 { 40.0 } else { 0.0 };
            8.0 + snow + 30.0 * noise.fbm(fx / 5.0, fy / 5.0, 5) * (1.0 - 0.5 * depth)
        }
    })
}

fn forest() -> LuminanceImage {
    let (w, h) = size();
    let mut rng = ChaCha8Rng::seed_from_u64(0xf0e);
    let noise = ValueNoise::new(&mut rng, 64);
    let trunks: Vec<(f64, f64)> = (0..60)
        .map(|_| (rng.random_range(0.0..w as f64), rng.random_range(1.5..6.0)))
        .collect();
    LuminanceImage::from_fn(w, h, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        for &(tx, tw) in &trunks {
            if (fx - tx).abs() < tw {
                return 6.0 + 5.0 * noise.at(fx / 2.0, fy / 2.0);
            }
        }
        let leaves = noise.fbm(fx / 4.0, fy / 4.0, 5);
        12.0 + 45.0 * leaves * leaves
    })
}

/// Renders a scene by name.
pub fn scene(name: &str) -> Option<LuminanceImage> {
    match name {
        "tulips" => Some(tulips()),
        "city" => Some(city()),
        "mountain" => Some(mountain()),
        "forest" => Some(forest()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_fit_the_display() {
        let g = scene_geometry();
        for name in SCENE_NAMES {
            let img = scene(name).unwrap();
            assert_eq!((img.width as u32, img.height as u32), g.resolution);
            let (lo, hi) = img.min_max();
            assert!(lo >= g.luminance_min && hi <= g.luminance_max, "{name}: {lo} {hi}");
            assert!(hi - lo > 20.0);
        }
        assert!(scene("desert").is_none());
    }

    #[test]
    fn deterministic() {
        assert_eq!(scene("forest"), scene("forest"));
    }
}
