use std::path::Path;

use anyhow::{Context, Result};
use attnfov::stimulus::decode_luminance;
use attnfov::{textfmt, DisplayGeometry, LuminanceImage};

use crate::DisplayArgs;

const DEFAULT_PPD: f64 = 12.0;
const VIEWING_DISTANCE: f64 = 0.94;

impl DisplayArgs {
    /// Geometry for a `width × height` image with the gaze at its centre.
    pub fn fitted(&self, width: u32, height: u32) -> Result<DisplayGeometry> {
        let geom = match &self.display {
            Some(path) => textfmt::read_file::<DisplayGeometry>(path)
                .with_context(|| format!("reading display geometry {}", path.display()))?
                .with_resolution(width, height),
            None => {
                let ppd = self.ppd.unwrap_or(DEFAULT_PPD);
                DisplayGeometry::with_ppd(ppd, VIEWING_DISTANCE, (width as f64 / ppd, height as f64 / ppd))
                    .with_resolution(width, height)
            }
        };
        geom.validate()?;
        Ok(geom)
    }

    /// The full display, for stimuli that are rendered at display size.
    pub fn full(&self) -> Result<DisplayGeometry> {
        let geom = match (&self.display, self.ppd) {
            (Some(path), _) => textfmt::read_file(path)
                .with_context(|| format!("reading display geometry {}", path.display()))?,
            (None, Some(ppd)) => DisplayGeometry::with_ppd(ppd, VIEWING_DISTANCE, (46.0, 20.0)),
            (None, None) => DisplayGeometry::study_default(),
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Decodes a PNG into luminance on a geometry fitted to it.
    pub fn load(&self, path: &Path) -> Result<(LuminanceImage, DisplayGeometry)> {
        let (w, h) = image::image_dimensions(path).with_context(|| format!("reading {}", path.display()))?;
        let geom = self.fitted(w, h)?;
        let img = decode_luminance(path, &geom).with_context(|| format!("decoding {}", path.display()))?;
        Ok((img, geom))
    }
}
