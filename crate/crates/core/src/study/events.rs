use serde::{Deserialize, Serialize};

use super::plan::{PlanEntry, StudyConfig};
use super::session::{ResponseOutcome, ResponseSubmission, TrialDescriptor};

/// Everything that changes a session. The log of these is the source of
/// truth; in-memory state is a fold over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        subject_id: String,
        /// Configuration with the seed filled in.
        config: StudyConfig,
        plan: Vec<PlanEntry>,
        at_ms: u64,
    },
    TrialIssued {
        trial: TrialDescriptor,
    },
    ResponseRecorded {
        submission: ResponseSubmission,
        at_ms: u64,
        outcome: ResponseOutcome,
    },
}
