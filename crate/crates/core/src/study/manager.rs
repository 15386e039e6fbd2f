use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::events::SessionEvent;
use super::plan::{StudyConfig, StudyKind, build_plan};
use super::render::render_trial;
use super::session::{Decision, Phase, ResponseOutcome, ResponseSubmission, ResultRow, Session, TrialDescriptor};
use super::store::{EventStore, validate_session_id};
use crate::error::{Error, Result};
use crate::fit::write_samples_csv;
use crate::stimulus::{DisplayGeometry, EncodedFrame};

/// Source of wall-clock milliseconds. Injectable so tests control time.
pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        Self(AtomicU64::new(start_ms))
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub subject_id: String,
    pub kind: StudyKind,
    pub seed: u64,
    pub plan_len: usize,
    pub plan_index: usize,
    pub trials_issued: u64,
    pub phase: Phase,
    pub done: bool,
}

impl SessionSummary {
    fn of(s: &Session, now_ms: u64) -> Self {
        Self {
            session_id: s.id.clone(),
            subject_id: s.subject_id.clone(),
            kind: s.kind(),
            seed: s.config.seed.unwrap_or_default(),
            plan_len: s.plan.len(),
            plan_index: s.plan_index(),
            trials_issued: s.trials_issued(),
            phase: s.phase(now_ms),
            done: s.is_done(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResults {
    pub session_id: String,
    pub subject_id: String,
    pub kind: StudyKind,
    pub done: bool,
    pub rows: Vec<ResultRow>,
}

impl SessionResults {
    /// Csf results in the threshold-fitting schema; foveation results as
    /// `image,attention,slope`.
    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        match self.kind {
            StudyKind::Csf => {
                let samples: Vec<_> = self
                    .rows
                    .iter()
                    .filter_map(|r| {
                        r.eccentricity_deg.map(|e| {
                            crate::fit::ThresholdSample::new(self.subject_id.clone(), e, r.attention, r.value, 0)
                        })
                    })
                    .collect();
                write_samples_csv(&mut buf, &samples)?;
            }
            StudyKind::Foveation => {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(["image", "attention", "slope"])?;
                for r in &self.rows {
                    w.write_record([r.condition.to_string(), r.attention.to_string(), r.value.to_string()])?;
                }
                w.flush()?;
            }
        }
        String::from_utf8(buf).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// Owns all live sessions. Every state change is appended to the store
/// before it is applied in memory, so a restart that replays the store
/// reproduces exactly the state clients have observed.
pub struct SessionManager {
    store: Arc<dyn EventStore>,
    clock: Arc<dyn Clock>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl SessionManager {
    pub fn new(store: Arc<dyn EventStore>, clock: Arc<dyn Clock>) -> Self {
        Self {
            store,
            clock,
            sessions: RwLock::new(HashMap::new()),
        }
    }

    /// Creates a manager and replays every session found in the store.
    pub fn recover(store: Arc<dyn EventStore>, clock: Arc<dyn Clock>) -> Result<Self> {
        let mgr = Self::new(store, clock);
        let mut map = HashMap::new();
        for id in mgr.store.session_ids()? {
            let events = mgr.store.load(&id)?;
            let session = Session::replay(&events)?;
            map.insert(id, Arc::new(Mutex::new(session)));
        }
        log::info!("recovered {} sessions", map.len());
        *mgr.sessions.write().unwrap_or_else(|e| e.into_inner()) = map;
        Ok(mgr)
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| Error::UnknownSession(id.to_string()))
    }

    fn commit(&self, session: &mut Session, event: &SessionEvent) -> Result<()> {
        self.store.append(&session.id, event)?;
        session.apply(event)
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    pub fn create_session(&self, subject_id: &str, mut config: StudyConfig) -> Result<SessionSummary> {
        if subject_id.trim().is_empty() {
            return Err(Error::InvalidParameter("subject id must not be empty".into()));
        }
        config.validate()?;
        let seed = *config.seed.get_or_insert_with(rand::random);
        let plan = build_plan(subject_id, &config, seed)?;
        let session_id = format!("{:032x}", rand::random::<u128>());
        validate_session_id(&session_id)?;
        let now = self.now_ms();
        let event = SessionEvent::Created {
            session_id: session_id.clone(),
            subject_id: subject_id.to_string(),
            config,
            plan,
            at_ms: now,
        };
        let session = Session::from_created(&event)?;
        self.store.append(&session_id, &event)?;
        let summary = SessionSummary::of(&session, now);
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(session_id, Arc::new(Mutex::new(session)));
        Ok(summary)
    }

    pub fn summary(&self, id: &str) -> Result<SessionSummary> {
        let s = self.get(id)?;
        let s = s.lock().unwrap_or_else(|e| e.into_inner());
        Ok(SessionSummary::of(&s, self.now_ms()))
    }

    /// A copy of the full in-memory state.
    pub fn snapshot(&self, id: &str) -> Result<Session> {
        let s = self.get(id)?;
        let s = s.lock().unwrap_or_else(|e| e.into_inner());
        Ok(s.clone())
    }

    /// Issues the next trial, or returns the active one unchanged.
    pub fn next_trial(&self, id: &str) -> Result<TrialDescriptor> {
        let s = self.get(id)?;
        let mut s = s.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(event) = s.decide_next_trial(self.now_ms())? {
            self.commit(&mut s, &event)?;
        }
        s.active_trial()
            .cloned()
            .ok_or_else(|| Error::InvalidParameter("no active trial after issue".into()))
    }

    pub fn submit_response(&self, id: &str, submission: &ResponseSubmission) -> Result<ResponseOutcome> {
        let s = self.get(id)?;
        let mut s = s.lock().unwrap_or_else(|e| e.into_inner());
        match s.decide_response(submission, self.now_ms())? {
            Decision::Duplicate(outcome) => Ok(outcome),
            Decision::Record(event) => {
                self.commit(&mut s, &event)?;
                match event {
                    SessionEvent::ResponseRecorded { outcome, .. } => Ok(outcome),
                    _ => unreachable!("responses record a response event"),
                }
            }
        }
    }

    pub fn results(&self, id: &str) -> Result<SessionResults> {
        let s = self.get(id)?;
        let s = s.lock().unwrap_or_else(|e| e.into_inner());
        Ok(SessionResults {
            session_id: s.id.clone(),
            subject_id: s.subject_id.clone(),
            kind: s.kind(),
            done: s.is_done(),
            rows: s.results(),
        })
    }

    /// Renders the active trial's stimulus frame.
    pub fn render_active(&self, id: &str, geom: &DisplayGeometry) -> Result<EncodedFrame> {
        let trial = {
            let s = self.get(id)?;
            let s = s.lock().unwrap_or_else(|e| e.into_inner());
            s.active_trial().cloned()
        };
        let trial = trial.ok_or_else(|| Error::InvalidParameter(format!("session {id} has no active trial")))?;
        render_trial(&trial, geom)
    }
}
