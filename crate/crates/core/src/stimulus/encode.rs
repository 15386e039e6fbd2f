use std::path::Path;

use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};

use super::{DisplayGeometry, LuminanceImage};
use crate::error::{Error, Result};

/// Ordered-dither ranks for a 2×2 cell, indexed `[y % 2][x % 2]`.
pub const BAYER_2X2: [[u8; 2]; 2] = [[0, 2], [3, 1]];

/// 8-bit grayscale frame ready for display.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedFrame {
    pub width: usize,
    pub height: usize,
    pub codes: Vec<u8>,
}

impl EncodedFrame {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            Luma([self.get(x as usize, y as usize)])
        })
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_gray_image().save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    pub fn png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_gray_image().write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }
}

/// Un-dithered code value `((L − Lmin)/(Lmax − Lmin))^(1/γ)·255`.
pub fn ideal_code(l: f64, geom: &DisplayGeometry) -> Result<f64> {
    let tol = 1e-9 * geom.luminance_max;
    if !(l >= geom.luminance_min - tol && l <= geom.luminance_max + tol) {
        return Err(Error::OutOfGamut {
            value: l,
            min: geom.luminance_min,
            max: geom.luminance_max,
        });
    }
    Ok(geom.normalize(l).clamp(0.0, 1.0).powf(1.0 / geom.gamma) * 255.0)
}

/// Inverse-gamma encodes and applies 2×2 ordered dithering. A uniform region
/// averages to the ideal code within 1/8 LSB per 2×2 block.
pub fn encode_display(img: &LuminanceImage, geom: &DisplayGeometry) -> Result<EncodedFrame> {
    let mut codes = Vec::with_capacity(img.samples.len());
    for y in 0..img.height {
        for (x, &l) in img.row(y).iter().enumerate() {
            let c = ideal_code(l, geom)?;
            let base = c.floor();
            let threshold = (BAYER_2X2[y % 2][x % 2] as f64 + 0.5) / 4.0;
            let code = if c - base > threshold { base + 1.0 } else { base };
            codes.push(code.min(255.0) as u8);
        }
    }
    Ok(EncodedFrame {
        width: img.width,
        height: img.height,
        codes,
    })
}

/// Reads an 8-bit image and maps its codes back to linear luminance through
/// the display model. Colour images are reduced with the primary weights.
pub fn decode_luminance(path: impl AsRef<Path>, geom: &DisplayGeometry) -> Result<LuminanceImage> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    let lin = |c: u8| (c as f64 / 255.0).powf(geom.gamma);
    let wsum: f64 = geom.luminance_weights.iter().sum();
    let span = geom.luminance_max - geom.luminance_min;
    Ok(LuminanceImage::from_fn(w as usize, h as usize, |x, y| {
        let p = img.get_pixel(x as u32, y as u32).0;
        let y_rel: f64 = (0..3).map(|i| geom.luminance_weights[i] * lin(p[i])).sum::<f64>() / wsum;
        geom.luminance_min + span * y_rel
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> DisplayGeometry {
        DisplayGeometry::study_default().with_resolution(8, 8)
    }

    fn luminance_for_code(c: f64, g: &DisplayGeometry) -> f64 {
        g.luminance_min + (g.luminance_max - g.luminance_min) * (c / 255.0).powf(g.gamma)
    }

    #[test]
    fn black_is_zero_everywhere() {
        let g = geom();
        let f = encode_display(&LuminanceImage::filled(4, 4, g.luminance_min), &g).unwrap();
        assert!(f.codes.iter().all(|&c| c == 0));
        let f = encode_display(&LuminanceImage::filled(4, 4, g.luminance_max), &g).unwrap();
        assert!(f.codes.iter().all(|&c| c == 255));
    }

    #[test]
    fn quarter_code_dithers_one_pixel_up() {
        let g = geom();
        let l = luminance_for_code(100.25, &g);
        let f = encode_display(&LuminanceImage::filled(2, 2, l), &g).unwrap();
        let mut block = f.codes.clone();
        block.sort();
        assert_eq!(block, vec![100, 100, 100, 101]);
    }

    #[test]
    fn block_average_tracks_ideal() {
        let g = geom();
        for i in 0..200 {
            let c = 0.3 + i as f64 * 1.27;
            let l = luminance_for_code(c, &g);
            let f = encode_display(&LuminanceImage::filled(2, 2, l), &g).unwrap();
            let avg = f.codes.iter().map(|&v| v as f64).sum::<f64>() / 4.0;
            assert!((avg - c).abs() <= 0.5, "{c} -> {avg}");
        }
    }

    #[test]
    fn out_of_gamut_is_rejected() {
        let g = geom();
        let img = LuminanceImage::filled(2, 2, g.luminance_max * 1.1);
        assert!(matches!(encode_display(&img, &g), Err(Error::OutOfGamut { .. })));
    }

    #[test]
    fn png_round_trip_is_close() {
        let g = geom();
        let l = 37.0;
        let f = encode_display(&LuminanceImage::filled(8, 8, l), &g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        f.write_png(&path).unwrap();
        let back = decode_luminance(&path, &g).unwrap();
        assert!((back.mean() - l).abs() / l < 0.01);
    }
}
