use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attention::AttentionLevel;
use crate::error::{Error, Result};
use crate::quest::QuestConfig;
use crate::reference_data;
use crate::scenes::SCENE_NAMES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    /// Contrast thresholds for Gabor stimuli.
    Csf,
    /// Just-noticeable MAR slope for foveated images.
    Foveation,
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csf => "csf",
            Self::Foveation => "foveation",
        })
    }
}

/// What a staircase measures: a numbered Gabor stimulus or a named image.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Stimulus(u32),
    Image(String),
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Stimulus(n) => write!(f, "stimulus-{n}"),
            Self::Image(name) => f.write_str(name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub condition: Condition,
    pub attention: AttentionLevel,
    pub repetition: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub kind: StudyKind,
    /// Stimulus numbers for csf studies.
    #[serde(default)]
    pub stimuli: Vec<u32>,
    /// Scene names for foveation studies.
    #[serde(default)]
    pub images: Vec<String>,
    pub repetitions: u32,
    #[serde(default)]
    pub quest: QuestConfig,
    /// Seeds the condition order and all trial randomisation. Drawn at
    /// creation when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl StudyConfig {
    /// Stimuli 1–3, two repetitions each.
    pub fn csf() -> Self {
        Self {
            kind: StudyKind::Csf,
            stimuli: vec![1, 2, 3],
            images: Vec::new(),
            repetitions: 2,
            quest: QuestConfig::default(),
            seed: None,
        }
    }

    /// Two scenes, one staircase per attention level.
    pub fn foveation() -> Self {
        Self {
            kind: StudyKind::Foveation,
            stimuli: Vec::new(),
            images: vec!["tulips".into(), "city".into()],
            repetitions: 1,
            quest: QuestConfig::default(),
            seed: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn conditions(&self) -> Vec<Condition> {
        match self.kind {
            StudyKind::Csf => self.stimuli.iter().map(|&n| Condition::Stimulus(n)).collect(),
            StudyKind::Foveation => self.images.iter().cloned().map(Condition::Image).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.quest.validate()?;
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        match self.kind {
            StudyKind::Csf => {
                if self.stimuli.is_empty() {
                    return Err(Error::Config("a csf study needs at least one stimulus".into()));
                }
                for n in &self.stimuli {
                    if reference_data::stimulus(*n).is_none() {
                        return Err(Error::Config(format!("unknown stimulus number {n}")));
                    }
                }
            }
            StudyKind::Foveation => {
                if self.images.is_empty() {
                    return Err(Error::Config("a foveation study needs at least one image".into()));
                }
                for name in &self.images {
                    if !SCENE_NAMES.contains(&name.as_str()) {
                        return Err(Error::Config(format!("unknown image {name:?}")));
                    }
                }
            }
        }
        let conditions = self.conditions();
        let mut unique = conditions.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != conditions.len() {
            return Err(Error::Config("conditions must not repeat".into()));
        }
        Ok(())
    }
}

/// Stable 64-bit FNV-1a, used to mix the subject into the plan seed.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Condition order is shuffled per subject; within a condition the
/// staircases run low, medium, high with repetitions back to back.
pub fn build_plan(subject_id: &str, config: &StudyConfig, seed: u64) -> Result<Vec<PlanEntry>> {
    config.validate()?;
    let mut conditions = config.conditions();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(subject_id));
    conditions.shuffle(&mut rng);
    let mut plan = Vec::new();
    for condition in conditions {
        for attention in AttentionLevel::ALL {
            for repetition in 0..config.repetitions {
                plan.push(PlanEntry {
                    condition: condition.clone(),
                    attention,
                    repetition,
                });
            }
        }
    }
    Ok(plan)
}
