//! Separable Gaussian filtering and Gaussian/Laplacian pyramids with
//! clamp-to-edge boundaries.

use rayon::prelude::*;

use crate::stimulus::LuminanceImage;

/// Normalised sampled Gaussian truncated at `ceil(4σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

fn convolve_rows(img: &LuminanceImage, kernel: &[f64]) -> LuminanceImage {
    let r = (kernel.len() / 2) as isize;
    let w = img.width;
    let mut out = vec![0.0; img.samples.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let src = img.row(y);
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let sx = (x as isize + i as isize - r).clamp(0, w as isize - 1) as usize;
                acc += k * src[sx];
            }
            *o = acc;
        }
    });
    LuminanceImage {
        width: w,
        height: img.height,
        samples: out,
    }
}

fn convolve_cols(img: &LuminanceImage, kernel: &[f64]) -> LuminanceImage {
    let r = (kernel.len() / 2) as isize;
    let (w, h) = img.dimensions();
    let mut out = vec![0.0; img.samples.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (i, k) in kernel.iter().enumerate() {
            let sy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
            let src = img.row(sy);
            for (o, s) in row.iter_mut().zip(src) {
                *o += k * s;
            }
        }
    });
    LuminanceImage {
        width: w,
        height: h,
        samples: out,
    }
}

/// Separable filtering with the same 1-D kernel along both axes.
pub fn separable(img: &LuminanceImage, kernel: &[f64]) -> LuminanceImage {
    convolve_cols(&convolve_rows(img, kernel), kernel)
}

pub fn gaussian_blur(img: &LuminanceImage, sigma: f64) -> LuminanceImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    separable(img, &gaussian_kernel(sigma))
}

/// Keeps samples with even coordinates.
pub fn decimate(img: &LuminanceImage) -> LuminanceImage {
    let w = img.width.div_ceil(2);
    let h = img.height.div_ceil(2);
    LuminanceImage::from_fn(w, h, |x, y| img.get(2 * x, 2 * y))
}

/// Bilinear sample at fractional pixel coordinates, clamped to the image.
#[inline]
pub fn bilinear(img: &LuminanceImage, fx: f64, fy: f64) -> f64 {
    let fx = fx.clamp(0.0, (img.width - 1) as f64);
    let fy = fy.clamp(0.0, (img.height - 1) as f64);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let top = img.get(x0, y0) * (1.0 - tx) + img.get(x1, y0) * tx;
    let bot = img.get(x0, y1) * (1.0 - tx) + img.get(x1, y1) * tx;
    top * (1.0 - ty) + bot * ty
}

/// Upsamples a decimated image to `width × height`; fine pixel `x` maps to
/// coarse coordinate `x / 2`.
pub fn expand(coarse: &LuminanceImage, width: usize, height: usize) -> LuminanceImage {
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = bilinear(coarse, x as f64 / 2.0, y as f64 / 2.0);
        }
    });
    LuminanceImage {
        width,
        height,
        samples: out,
    }
}

/// 5-tap binomial low-pass used between pyramid levels.
pub const BINOMIAL_5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

pub fn reduce(img: &LuminanceImage) -> LuminanceImage {
    decimate(&separable(img, &BINOMIAL_5))
}

/// Gaussian pyramid; level 0 is the input.
pub fn gaussian_pyramid(img: &LuminanceImage, levels: usize) -> Vec<LuminanceImage> {
    let mut out = vec![img.clone()];
    while out.len() < levels {
        let last = out.last().expect("non-empty");
        if last.width < 2 || last.height < 2 {
            break;
        }
        out.push(reduce(last));
    }
    out
}

/// Laplacian decomposition: `bands[b] = G_b − expand(G_{b+1})` for all but
/// the last level, which holds the residual low-pass. `lowpass[b]` is
/// `expand(G_{b+1})`, the local mean each band is relative to.
pub struct LaplacianPyramid {
    pub bands: Vec<LuminanceImage>,
    pub lowpass: Vec<LuminanceImage>,
}

impl LaplacianPyramid {
    pub fn build(img: &LuminanceImage, levels: usize) -> Self {
        let g = gaussian_pyramid(img, levels);
        let mut bands = Vec::with_capacity(g.len());
        let mut lowpass = Vec::with_capacity(g.len());
        for b in 0..g.len() - 1 {
            let up = expand(&g[b + 1], g[b].width, g[b].height);
            let band = g[b]
                .samples
                .iter()
                .zip(&up.samples)
                .map(|(a, u)| a - u)
                .collect();
            bands.push(LuminanceImage {
                width: g[b].width,
                height: g[b].height,
                samples: band,
            });
            lowpass.push(up);
        }
        let top = g.last().expect("non-empty").clone();
        lowpass.push(top.clone());
        bands.push(top);
        Self { bands, lowpass }
    }

    /// Inverts the decomposition exactly (up to rounding).
    pub fn reconstruct(&self) -> LuminanceImage {
        let mut cur = self.bands.last().expect("non-empty").clone();
        for band in self.bands.iter().rev().skip(1) {
            let up = expand(&cur, band.width, band.height);
            cur = LuminanceImage {
                width: band.width,
                height: band.height,
                samples: band.samples.iter().zip(&up.samples).map(|(b, u)| b + u).collect(),
            };
        }
        cur
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> LuminanceImage {
        LuminanceImage::from_fn(w, h, |x, y| 10.0 + (x * 7 + y * 13 % 11) as f64 % 17.0)
    }

    #[test]
    fn kernel_is_normalised() {
        for s in [0.3, 1.0, 2.7, 9.0] {
            let k = gaussian_kernel(s);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(k.len(), 2 * (4.0 * s).ceil() as usize + 1);
        }
    }

    #[test]
    fn blur_preserves_constants() {
        let img = LuminanceImage::filled(17, 9, 3.5);
        let b = gaussian_blur(&img, 2.3);
        assert!(b.samples.iter().all(|v| (v - 3.5).abs() < 1e-12));
    }

    #[test]
    fn separable_matches_direct_2d() {
        let img = ramp(23, 19);
        let s = 1.7;
        let b = gaussian_blur(&img, s);
        let k = gaussian_kernel(s);
        let r = (k.len() / 2) as isize;
        for (x, y) in [(0, 0), (5, 7), (22, 18), (11, 3)] {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    acc += k[(dx + r) as usize] * k[(dy + r) as usize] * img.get_clamped(x as isize + dx, y as isize + dy);
                }
            }
            assert!((acc - b.get(x, y)).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_reconstructs() {
        let img = ramp(37, 29);
        let p = LaplacianPyramid::build(&img, 4);
        assert_eq!(p.bands.len(), 4);
        let r = p.reconstruct();
        for (a, b) in img.samples.iter().zip(&r.samples) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn bilinear_hits_samples() {
        let img = ramp(5, 4);
        assert_eq!(bilinear(&img, 2.0, 3.0), img.get(2, 3));
        let mid = bilinear(&img, 2.5, 1.0);
        assert!((mid - 0.5 * (img.get(2, 1) + img.get(3, 1))).abs() < 1e-12);
    }
}
