//! Study sessions: condition plans, trial sequencing, response handling and
//! crash-safe persistence.

mod events;
mod manager;
mod plan;
mod render;
mod session;
mod store;

pub use events::SessionEvent;
pub use manager::{Clock, ManualClock, SessionManager, SessionResults, SessionSummary, SystemClock};
pub use plan::{Condition, PlanEntry, StudyConfig, StudyKind, build_plan};
pub use render::render_trial;
pub use session::{
    AfcAnswer, Decision, Latencies, Phase, ResponseOutcome, ResponseStatus, ResponseSubmission, ResultRow,
    Session, Side, StaircaseResult, StimulusPayload, TrialDescriptor, TrialTiming,
};
pub use store::{EventStore, JsonlStore, MemoryStore, validate_session_id};
