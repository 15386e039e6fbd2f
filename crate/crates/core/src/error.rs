use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reference threshold {0} is not positive; gain is undefined")]
    DivisionGuard(f64),

    #[error("least-squares system is rank deficient: {0}")]
    RankDeficient(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("subject {0} has no low-attention measurement to adjust against")]
    MissingBaseline(String),

    #[error("constraint cannot be satisfied: {0}")]
    ConstraintInfeasible(String),

    #[error("stimulus would clip: {0}")]
    Clipping(String),

    #[error("luminance {value} cd/m² is outside the display range [{min}, {max}]")]
    OutOfGamut { value: f64, min: f64, max: f64 },

    #[error("image dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("quality threshold {q_thr} is not reachable even at the lower bracket (Q = {q_lo})")]
    Infeasible { q_thr: f64, q_lo: f64 },

    #[error("degenerate bracket [{lo}, {hi}]")]
    DegenerateBracket { lo: f64, hi: f64 },

    #[error("quadrature did not converge after {refinements} refinements (last change {last_change:e})")]
    NonConvergence { refinements: usize, last_change: f64 },

    #[error("staircase is finished")]
    StaircaseFinished,

    #[error("unknown session {0}")]
    UnknownSession(String),

    #[error("session {0} is complete")]
    SessionDone(String),

    #[error("trial {got} is not the active trial (active: {active:?})")]
    StaleTrial { got: String, active: Option<String> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupt event log {path}: {reason}")]
    CorruptLog { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            what,
            value,
            expected,
        }
    }
}
