//! Fixed 5×7 bitmap letters.

use std::collections::HashMap;
use std::sync::OnceLock;

pub const GLYPH_WIDTH: usize = 5;
pub const GLYPH_HEIGHT: usize = 7;

/// Seven rows of five bits, most significant bit leftmost.
pub type Glyph = [u8; GLYPH_HEIGHT];

const ATLAS: &str = include_str!("../../assets/font5x7.txt");

fn atlas() -> &'static HashMap<char, Glyph> {
    static MAP: OnceLock<HashMap<char, Glyph>> = OnceLock::new();
    MAP.get_or_init(|| {
        let mut map = HashMap::new();
        for line in ATLAS.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let ch = parts.next().and_then(|s| s.chars().next()).expect("glyph letter");
            let mut g = [0u8; GLYPH_HEIGHT];
            for (row, bits) in g.iter_mut().zip(parts) {
                *row = u8::from_str_radix(bits, 2).expect("glyph row");
            }
            map.insert(ch, g);
        }
        map
    })
}

pub fn glyph(ch: char) -> Option<&'static Glyph> {
    atlas().get(&ch.to_ascii_uppercase())
}

/// Letters available in the atlas, sorted.
pub fn alphabet() -> Vec<char> {
    let mut v: Vec<char> = atlas().keys().copied().collect();
    v.sort_unstable();
    v
}

#[inline]
pub fn is_set(g: &Glyph, col: usize, row: usize) -> bool {
    g[row] >> (GLYPH_WIDTH - 1 - col) & 1 == 1
}
