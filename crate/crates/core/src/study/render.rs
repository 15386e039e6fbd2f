use super::session::{Side, StimulusPayload, TrialDescriptor};
use crate::error::{Error, Result};
use crate::foveation::{FoveationConfig, MarModel, compose_split_screen, foveate_image};
use crate::scenes::{scene, scene_geometry};
use crate::stimulus::{DisplayGeometry, EncodedFrame, encode_display, gabors_image};

/// Renders the stimulus frame of a trial as display codes.
///
/// Gabor pairs are drawn on `geom`. Split-screen images always use the scene
/// geometry they were generated for; the degraded half is foveated about the
/// display centre at the trial's slope.
pub fn render_trial(trial: &TrialDescriptor, geom: &DisplayGeometry) -> Result<EncodedFrame> {
    match &trial.stimulus {
        StimulusPayload::GaborPair { left, right } => {
            let img = gabors_image(&[*left, *right], geom)?;
            encode_display(&img, geom)
        }
        StimulusPayload::SplitScreen { image, slope, degraded_side } => {
            let geom = scene_geometry();
            let reference = scene(image).ok_or_else(|| Error::Config(format!("unknown image {image}")))?;
            let model = MarModel::new(*slope)?;
            let degraded = foveate_image(&reference, &geom, &model, &FoveationConfig::for_display(&geom))?;
            let img = match degraded_side {
                Side::Left => compose_split_screen(&degraded, &reference, &geom)?,
                Side::Right => compose_split_screen(&reference, &degraded, &geom)?,
            };
            encode_display(&img, &geom)
        }
    }
}
