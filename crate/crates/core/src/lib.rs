//! Attention-aware contrast sensitivity and foveation toolkit.
//!
//! The crate is organised around the measurement-to-rendering pipeline:
//!
//! * [`csf`] holds the eccentricity/attention threshold models, the attention
//!   gain and the cortical magnification scaling of stimuli.
//! * [`fit`] fits those models to threshold data.
//! * [`stimulus`] synthesises Gabor patches, RSVP letter streams and encodes
//!   linear luminance for an 8-bit display.
//! * [`foveation`] implements the MAR blur model and the split-screen
//!   composition used to measure foveation tolerance.
//! * [`quality`] is a band-limited visual difference predictor with an
//!   attention-aware CSF and the bisection search for the largest acceptable
//!   MAR slope.
//! * [`bandwidth`] integrates sampling-density savings over a field of view.
//! * [`quest`] is a Bayesian 2AFC staircase with a simulated observer.
//! * [`study`] drives event-sourced study sessions on top of all of the above.

pub mod attention;
pub mod bandwidth;
pub mod csf;
pub mod error;
pub mod fit;
pub mod foveation;
pub mod pyramid;
pub mod quality;
pub mod quest;
pub mod reference_data;
pub mod scenes;
pub mod stimulus;
pub mod study;
pub mod textfmt;

pub use attention::AttentionLevel;
pub use csf::{
    AttentionModel, BaselineCsf, CorticalMagnification, CorticalSurrogateCsf, CsfQuery,
    Eccentricity, Evaluated, ThresholdModel, UnifiedModel,
};
pub use error::{Error, Result};
pub use foveation::{FoveationConfig, MarModel};
pub use quest::{QuestConfig, SimulatedObserver, StaircaseState};
pub use stimulus::{DisplayGeometry, EncodedFrame, LuminanceImage};
