//! Stimulus synthesis: display geometry, Gabor patches, RSVP letter streams
//! and 8-bit display encoding.

mod encode;
mod gabor;
mod geometry;
pub mod glyphs;
mod image;
mod rsvp;

pub use encode::{decode_luminance, encode_display, ideal_code, EncodedFrame, BAYER_2X2};
pub use gabor::{gabor_image, gabors_image, michelson_contrast, GaborSpec};
pub use geometry::DisplayGeometry;
pub use image::LuminanceImage;
pub use rsvp::{isoluminant_rgb, render_letter, rsvp_sequence, RsvpColor, RsvpItem, RsvpSchedule, RsvpSpec};
