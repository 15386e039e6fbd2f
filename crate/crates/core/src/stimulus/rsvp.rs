use std::fmt;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::glyphs::{self, GLYPH_HEIGHT, GLYPH_WIDTH};
use super::DisplayGeometry;
use crate::attention::AttentionLevel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RsvpColor {
    Red,
    Green,
}

impl RsvpColor {
    pub fn other(self) -> Self {
        match self {
            Self::Red => Self::Green,
            Self::Green => Self::Red,
        }
    }
}

impl fmt::Display for RsvpColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Red => "red",
            Self::Green => "green",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsvpSpec {
    pub n_letters: usize,
    /// Total stream duration, ms.
    pub duration_ms: f64,
    /// Edge length of a letter, degrees.
    pub letter_size_deg: f64,
    pub target: char,
    /// Keep the target out of the first third of the stream.
    pub constrain_first_third: bool,
}

impl RsvpSpec {
    pub fn new(n_letters: usize) -> Self {
        Self {
            n_letters,
            duration_ms: 500.0,
            letter_size_deg: 1.0,
            target: 'T',
            constrain_first_third: n_letters > 1,
        }
    }

    /// Stream length 1, 4 or 6 for low, medium and high foveal load.
    pub fn for_attention(a: AttentionLevel) -> Self {
        Self::new(a.rsvp_letters())
    }

    /// Indices the target may occupy.
    pub fn allowed_target_indices(&self) -> Result<std::ops::Range<usize>> {
        if self.n_letters == 0 {
            return Err(Error::InvalidParameter("RSVP stream needs at least one letter".into()));
        }
        if !self.constrain_first_third {
            return Ok(0..self.n_letters);
        }
        if self.n_letters < 2 {
            return Err(Error::ConstraintInfeasible(format!(
                "target cannot avoid the first third of a {}-letter stream",
                self.n_letters
            )));
        }
        Ok(self.n_letters.div_ceil(3)..self.n_letters)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsvpItem {
    pub letter: char,
    pub color: RsvpColor,
    pub onset_ms: f64,
    pub offset_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsvpSchedule {
    pub items: Vec<RsvpItem>,
    pub target_index: usize,
}

impl RsvpSchedule {
    pub fn target_color(&self) -> RsvpColor {
        self.items[self.target_index].color
    }
}

/// Draws a letter stream: one target, distractors from the rest of the
/// alphabet without immediate repeats, colours alternating from a random
/// start and back-to-back presentation of `duration/N` each.
pub fn rsvp_sequence(spec: &RsvpSpec, seed: u64) -> Result<RsvpSchedule> {
    let allowed = spec.allowed_target_indices()?;
    if glyphs::glyph(spec.target).is_none() {
        return Err(Error::InvalidParameter(format!("no glyph for target {:?}", spec.target)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_index = rng.random_range(allowed);
    let mut color = if rng.random_bool(0.5) { RsvpColor::Red } else { RsvpColor::Green };
    let distractors: Vec<char> = glyphs::alphabet()
        .into_iter()
        .filter(|c| *c != spec.target.to_ascii_uppercase())
        .collect();
    let step = spec.duration_ms / spec.n_letters as f64;
    let mut items = Vec::with_capacity(spec.n_letters);
    let mut prev = None;
    for i in 0..spec.n_letters {
        let letter = if i == target_index {
            spec.target.to_ascii_uppercase()
        } else {
            loop {
                let c = distractors[rng.random_range(0..distractors.len())];
                if Some(c) != prev {
                    break c;
                }
            }
        };
        items.push(RsvpItem {
            letter,
            color,
            onset_ms: i as f64 * step,
            offset_ms: (i + 1) as f64 * step,
        });
        prev = Some(letter);
        color = color.other();
    }
    Ok(RsvpSchedule { items, target_index })
}

/// Linear RGB in `[0, 1]` of a red or green whose luminance matches `target`
/// cd/m². When the pure primary is too dim it is desaturated towards white.
pub fn isoluminant_rgb(color: RsvpColor, target: f64, geom: &DisplayGeometry) -> Result<[f64; 3]> {
    let w = geom.luminance_weights;
    let wsum: f64 = w.iter().sum();
    let y = geom.normalize(target) * wsum;
    if !(0.0..=wsum).contains(&y) {
        return Err(Error::OutOfGamut {
            value: target,
            min: geom.luminance_min,
            max: geom.luminance_max,
        });
    }
    let primary = match color {
        RsvpColor::Red => 0,
        RsvpColor::Green => 1,
    };
    let mut rgb = [0.0; 3];
    if y <= w[primary] {
        rgb[primary] = y / w[primary];
    } else {
        let rest = (y - w[primary]) / (wsum - w[primary]);
        rgb = [rest; 3];
        rgb[primary] = 1.0;
    }
    Ok(rgb)
}

/// Renders a letter on the neutral background, `letter_size_deg` square,
/// with the glyph drawn isoluminant to the background.
pub fn render_letter(item: &RsvpItem, spec: &RsvpSpec, geom: &DisplayGeometry) -> Result<RgbImage> {
    let g = glyphs::glyph(item.letter)
        .ok_or_else(|| Error::InvalidParameter(format!("no glyph for {:?}", item.letter)))?;
    let size = (spec.letter_size_deg * geom.pixels_per_degree()).round().max(GLYPH_HEIGHT as f64) as u32;
    let encode = |lin: f64| (lin.clamp(0.0, 1.0).powf(1.0 / geom.gamma) * 255.0).round() as u8;
    let grey = geom.normalize(geom.background_luminance);
    let bg = Rgb([encode(grey); 3]);
    let fg_lin = isoluminant_rgb(item.color, geom.background_luminance, geom)?;
    let fg = Rgb(fg_lin.map(encode));
    let cell = size as f64 / GLYPH_HEIGHT as f64;
    let x0 = (size as f64 - cell * GLYPH_WIDTH as f64) / 2.0;
    Ok(RgbImage::from_fn(size, size, |x, y| {
        let col = ((x as f64 - x0) / cell).floor();
        let row = (y as f64 / cell).floor() as usize;
        if col >= 0.0 && (col as usize) < GLYPH_WIDTH && row < GLYPH_HEIGHT && glyphs::is_set(g, col as usize, row) {
            fg
        } else {
            bg
        }
    }))
}
