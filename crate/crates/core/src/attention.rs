use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Amount of attention drawn to the fovea by the concurrent RSVP task.
///
/// `Low` is the conventional measurement condition (easy foveal task, the
/// periphery receives most attention); `High` loads the fovea the most.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionLevel {
    Low,
    Medium,
    High,
}

impl AttentionLevel {
    pub const ALL: [AttentionLevel; 3] = [Self::Low, Self::Medium, Self::High];

    /// Continuous attention coordinate: low → 0, medium → 0.5, high → 1.
    pub fn as_continuous(self) -> f64 {
        match self {
            Self::Low => 0.0,
            Self::Medium => 0.5,
            Self::High => 1.0,
        }
    }

    /// Letters in the RSVP stream that induce this level.
    pub fn rsvp_letters(self) -> usize {
        match self {
            Self::Low => 1,
            Self::Medium => 4,
            Self::High => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
}

impl fmt::Display for AttentionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttentionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(Self::Low),
            "medium" | "med" => Ok(Self::Medium),
            "high" => Ok(Self::High),
            other => Err(Error::InvalidParameter(format!(
                "unknown attention level '{other}'"
            ))),
        }
    }
}
