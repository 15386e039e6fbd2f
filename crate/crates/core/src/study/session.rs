use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::events::SessionEvent;
use super::plan::{Condition, PlanEntry, StudyConfig, StudyKind};
use crate::attention::AttentionLevel;
use crate::error::{Error, Result};
use crate::fit::ThresholdSample;
use crate::quest::{Estimate, StaircaseState};
use crate::reference_data;
use crate::stimulus::{GaborSpec, RsvpColor, RsvpSchedule, RsvpSpec, rsvp_sequence};

/// Presentation timeline of one trial, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub fixation_ms: u64,
    pub stimulus_ms: u64,
    pub mask_ms: u64,
    pub response_ms: u64,
    /// Allowance on the response window for network and clock jitter.
    pub grace_ms: u64,
}

impl Default for TrialTiming {
    fn default() -> Self {
        Self {
            fixation_ms: 1200,
            stimulus_ms: 500,
            mask_ms: 1000,
            response_ms: 10_000,
            grace_ms: 250,
        }
    }
}

impl TrialTiming {
    /// Offset from issue at which the response window opens.
    pub fn response_opens(&self) -> u64 {
        self.fixation_ms + self.stimulus_ms + self.mask_ms
    }

    /// Offset from issue after which a response counts as a timeout.
    pub fn deadline(&self) -> u64 {
        self.response_opens() + self.response_ms + self.grace_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Second-task answer: orientation comparison for Gabor pairs, or which
/// side looked more degraded for split-screen images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AfcAnswer {
    Same,
    Different,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StimulusPayload {
    GaborPair { left: GaborSpec, right: GaborSpec },
    SplitScreen { image: String, slope: f64, degraded_side: Side },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Fixation,
    Stimulus,
    Mask,
    Response,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDescriptor {
    pub trial_id: String,
    pub seq: u64,
    pub plan_index: usize,
    pub condition: Condition,
    pub attention: AttentionLevel,
    pub repetition: u32,
    /// Contrast for csf studies, MAR slope for foveation studies.
    pub intensity: f64,
    pub timing: TrialTiming,
    pub rsvp_spec: RsvpSpec,
    pub rsvp: RsvpSchedule,
    pub stimulus: StimulusPayload,
    pub issued_at_ms: u64,
    /// Set when this trial re-presents the previous intensity after a
    /// timeout or a failed foveal task.
    #[serde(default)]
    pub repeat_of: Option<String>,
}

impl TrialDescriptor {
    pub fn expected_afc(&self) -> AfcAnswer {
        match &self.stimulus {
            StimulusPayload::GaborPair { left, right } => {
                if left.orientation_deg == right.orientation_deg {
                    AfcAnswer::Same
                } else {
                    AfcAnswer::Different
                }
            }
            StimulusPayload::SplitScreen { degraded_side, .. } => match degraded_side {
                Side::Left => AfcAnswer::Left,
                Side::Right => AfcAnswer::Right,
            },
        }
    }

    pub fn expected_rsvp(&self) -> RsvpColor {
        self.rsvp.target_color()
    }

    pub fn phase_at(&self, now_ms: u64) -> Phase {
        let t = now_ms.saturating_sub(self.issued_at_ms);
        let timing = &self.timing;
        if t < timing.fixation_ms {
            Phase::Fixation
        } else if t < timing.fixation_ms + timing.stimulus_ms {
            Phase::Stimulus
        } else if t < timing.response_opens() {
            Phase::Mask
        } else {
            Phase::Response
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latencies {
    pub rsvp_ms: Option<f64>,
    pub afc_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSubmission {
    pub trial_id: String,
    #[serde(default)]
    pub rsvp_answer: Option<RsvpColor>,
    #[serde(default)]
    pub afc_answer: Option<AfcAnswer>,
    /// Client-measured latencies, kept for audit only.
    #[serde(default)]
    pub latencies: Option<Latencies>,
    /// Fixation verification from external tooling, logged verbatim.
    #[serde(default)]
    pub fixation_ok: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    /// The response updated the staircase.
    Accepted,
    /// No valid response in time; the same intensity is presented again.
    Replay,
    /// The foveal task was failed; the step is restarted at the same
    /// intensity.
    RestartStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseOutcome {
    pub trial_id: String,
    pub status: ResponseStatus,
    pub timed_out: bool,
    pub rsvp_correct: Option<bool>,
    /// Correctness of the 2AFC answer when it was applied to the staircase.
    pub correct: Option<bool>,
    pub staircase_finished: bool,
    pub session_done: bool,
    /// True when this is a resubmission of an already answered trial.
    #[serde(default)]
    pub duplicate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseResult {
    pub entry: PlanEntry,
    pub estimate: Estimate,
    pub trials: usize,
}

/// Per (condition, attention) summary across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub condition: Condition,
    pub attention: AttentionLevel,
    pub eccentricity_deg: Option<f64>,
    pub repetitions: usize,
    /// Geometric mean of the staircase thresholds.
    pub value: f64,
    pub values: Vec<f64>,
}

/// Result of validating a submission against the current state.
pub enum Decision {
    /// Already answered; nothing to record.
    Duplicate(ResponseOutcome),
    Record(SessionEvent),
}

/// In-memory state of one session, a fold over its events.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub subject_id: String,
    pub config: StudyConfig,
    pub plan: Vec<PlanEntry>,
    pub created_at_ms: u64,
    seed: u64,
    plan_index: usize,
    staircase: StaircaseState,
    completed: Vec<StaircaseResult>,
    active: Option<TrialDescriptor>,
    next_seq: u64,
    outcomes: BTreeMap<String, ResponseOutcome>,
    repeat_of: Option<String>,
    events: usize,
}

impl Session {
    /// Builds the initial state from a `Created` event.
    pub fn from_created(event: &SessionEvent) -> Result<Self> {
        let SessionEvent::Created {
            session_id,
            subject_id,
            config,
            plan,
            at_ms,
        } = event
        else {
            return Err(Error::InvalidParameter("session log must start with a created event".into()));
        };
        let seed = config
            .seed
            .ok_or_else(|| Error::Config("persisted configuration lacks a seed".into()))?;
        if plan.is_empty() {
            return Err(Error::Config("empty condition plan".into()));
        }
        Ok(Self {
            id: session_id.clone(),
            subject_id: subject_id.clone(),
            config: config.clone(),
            plan: plan.clone(),
            created_at_ms: *at_ms,
            seed,
            plan_index: 0,
            staircase: StaircaseState::new(config.quest)?,
            completed: Vec::new(),
            active: None,
            next_seq: 0,
            outcomes: BTreeMap::new(),
            repeat_of: None,
            events: 1,
        })
    }

    /// Rebuilds a session from its complete event log.
    pub fn replay(events: &[SessionEvent]) -> Result<Self> {
        let (first, rest) = events
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty session log".into()))?;
        let mut s = Self::from_created(first)?;
        for e in rest {
            s.apply(e)?;
        }
        Ok(s)
    }

    pub fn kind(&self) -> StudyKind {
        self.config.kind
    }

    pub fn is_done(&self) -> bool {
        self.plan_index >= self.plan.len()
    }

    pub fn plan_index(&self) -> usize {
        self.plan_index
    }

    pub fn current_entry(&self) -> Option<&PlanEntry> {
        self.plan.get(self.plan_index)
    }

    pub fn staircase(&self) -> &StaircaseState {
        &self.staircase
    }

    pub fn completed(&self) -> &[StaircaseResult] {
        &self.completed
    }

    pub fn active_trial(&self) -> Option<&TrialDescriptor> {
        self.active.as_ref()
    }

    pub fn trials_issued(&self) -> u64 {
        self.next_seq
    }

    pub fn events_applied(&self) -> usize {
        self.events
    }

    pub fn phase(&self, now_ms: u64) -> Phase {
        if self.is_done() {
            return Phase::Done;
        }
        self.active.as_ref().map_or(Phase::Fixation, |t| t.phase_at(now_ms))
    }

    /// The event issuing the next trial, or `None` when a trial is already
    /// active.
    pub fn decide_next_trial(&self, now_ms: u64) -> Result<Option<SessionEvent>> {
        if self.is_done() {
            return Err(Error::SessionDone(self.id.clone()));
        }
        if self.active.is_some() {
            return Ok(None);
        }
        let entry = &self.plan[self.plan_index];
        let intensity = self.staircase.next_intensity()?;
        let seq = self.next_seq;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(seq);

        let rsvp_spec = RsvpSpec::for_attention(entry.attention);
        let rsvp = rsvp_sequence(&rsvp_spec, rng.random())?;
        let stimulus = match &entry.condition {
            Condition::Stimulus(n) => {
                let row = reference_data::stimulus(*n)
                    .ok_or_else(|| Error::Config(format!("unknown stimulus number {n}")))?;
                let mut orientation = || if rng.random_bool(0.5) { 0.0 } else { 90.0 };
                let (lo, ro) = (orientation(), orientation());
                let gabor = |x: f64, theta: f64| {
                    GaborSpec::from_diameter(
                        (x, 0.0),
                        theta,
                        row.diameter,
                        row.frequency,
                        intensity,
                        row.adaptation_luminance,
                    )
                };
                StimulusPayload::GaborPair {
                    left: gabor(-row.eccentricity, lo),
                    right: gabor(row.eccentricity, ro),
                }
            }
            Condition::Image(name) => StimulusPayload::SplitScreen {
                image: name.clone(),
                slope: intensity,
                degraded_side: if rng.random_bool(0.5) { Side::Left } else { Side::Right },
            },
        };
        Ok(Some(SessionEvent::TrialIssued {
            trial: TrialDescriptor {
                trial_id: format!("{}-t{:05}", self.id, seq),
                seq,
                plan_index: self.plan_index,
                condition: entry.condition.clone(),
                attention: entry.attention,
                repetition: entry.repetition,
                intensity,
                timing: TrialTiming::default(),
                rsvp_spec,
                rsvp,
                stimulus,
                issued_at_ms: now_ms,
                repeat_of: self.repeat_of.clone(),
            },
        }))
    }

    /// Validates a submission and works out its consequences without
    /// changing state.
    pub fn decide_response(&self, submission: &ResponseSubmission, now_ms: u64) -> Result<Decision> {
        if let Some(prev) = self.outcomes.get(&submission.trial_id) {
            return Ok(Decision::Duplicate(ResponseOutcome {
                duplicate: true,
                ..prev.clone()
            }));
        }
        let trial = match &self.active {
            Some(t) if t.trial_id == submission.trial_id => t,
            _ if self.is_done() => return Err(Error::SessionDone(self.id.clone())),
            other => {
                return Err(Error::StaleTrial {
                    got: submission.trial_id.clone(),
                    active: other.as_ref().map(|t| t.trial_id.clone()),
                })
            }
        };

        let late = now_ms > trial.issued_at_ms + trial.timing.deadline();
        let timed_out = late || submission.afc_answer.is_none() || submission.rsvp_answer.is_none();
        let rsvp_correct = submission.rsvp_answer.map(|c| c == trial.expected_rsvp());
        let status = if timed_out {
            ResponseStatus::Replay
        } else if self.config.kind == StudyKind::Foveation && rsvp_correct == Some(false) {
            ResponseStatus::RestartStep
        } else {
            ResponseStatus::Accepted
        };

        let mut correct = None;
        let mut staircase_finished = false;
        if status == ResponseStatus::Accepted {
            let c = submission.afc_answer == Some(trial.expected_afc());
            let mut next = self.staircase.clone();
            next.update(trial.intensity, c)?;
            staircase_finished = next.is_done();
            correct = Some(c);
        }
        let outcome = ResponseOutcome {
            trial_id: trial.trial_id.clone(),
            status,
            timed_out,
            rsvp_correct,
            correct,
            staircase_finished,
            session_done: staircase_finished && self.plan_index + 1 == self.plan.len(),
            duplicate: false,
        };
        Ok(Decision::Record(SessionEvent::ResponseRecorded {
            submission: submission.clone(),
            at_ms: now_ms,
            outcome,
        }))
    }

    /// Folds one event into the state.
    pub fn apply(&mut self, event: &SessionEvent) -> Result<()> {
        match event {
            SessionEvent::Created { .. } => {
                return Err(Error::InvalidParameter("duplicate created event".into()));
            }
            SessionEvent::TrialIssued { trial } => {
                if self.active.is_some() || trial.seq != self.next_seq || trial.plan_index != self.plan_index {
                    return Err(Error::InvalidParameter(format!(
                        "trial {} does not follow the session state",
                        trial.trial_id
                    )));
                }
                self.active = Some(trial.clone());
                self.next_seq += 1;
            }
            SessionEvent::ResponseRecorded { outcome, .. } => {
                let trial = match self.active.take() {
                    Some(t) if t.trial_id == outcome.trial_id => t,
                    other => {
                        self.active = other;
                        return Err(Error::InvalidParameter(format!(
                            "response for {} does not match the active trial",
                            outcome.trial_id
                        )));
                    }
                };
                match (outcome.status, outcome.correct) {
                    (ResponseStatus::Accepted, Some(correct)) => {
                        self.staircase.update(trial.intensity, correct)?;
                        self.repeat_of = None;
                        if self.staircase.is_done() {
                            self.completed.push(StaircaseResult {
                                entry: self.plan[self.plan_index].clone(),
                                estimate: self.staircase.estimate(),
                                trials: self.staircase.trial_count(),
                            });
                            self.plan_index += 1;
                            self.staircase = StaircaseState::new(self.config.quest)?;
                        }
                    }
                    (ResponseStatus::Accepted, None) => {
                        return Err(Error::InvalidParameter("accepted response without correctness".into()));
                    }
                    _ => self.repeat_of = Some(trial.trial_id.clone()),
                }
                self.outcomes.insert(outcome.trial_id.clone(), outcome.clone());
            }
        }
        self.events += 1;
        Ok(())
    }

    /// Thresholds (or slopes) per condition and attention, averaged
    /// geometrically over finished repetitions.
    pub fn results(&self) -> Vec<ResultRow> {
        let mut groups: BTreeMap<(Condition, AttentionLevel), Vec<f64>> = BTreeMap::new();
        for r in &self.completed {
            groups
                .entry((r.entry.condition.clone(), r.entry.attention))
                .or_default()
                .push(r.estimate.threshold);
        }
        groups
            .into_iter()
            .map(|((condition, attention), values)| {
                let value = (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp();
                let eccentricity_deg = match &condition {
                    Condition::Stimulus(n) => reference_data::stimulus(*n).map(|r| r.eccentricity),
                    Condition::Image(_) => None,
                };
                ResultRow {
                    condition,
                    attention,
                    eccentricity_deg,
                    repetitions: values.len(),
                    value,
                    values,
                }
            })
            .collect()
    }

    /// Csf results in the threshold-fitting input schema.
    pub fn threshold_samples(&self) -> Vec<ThresholdSample> {
        self.results()
            .into_iter()
            .filter_map(|r| {
                r.eccentricity_deg
                    .map(|e| ThresholdSample::new(self.subject_id.clone(), e, r.attention, r.value, 0))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::plan::build_plan;

    fn created(config: StudyConfig) -> SessionEvent {
        let seed = config.seed.unwrap();
        SessionEvent::Created {
            session_id: "s1".into(),
            subject_id: "p01".into(),
            plan: build_plan("p01", &config, seed).unwrap(),
            config,
            at_ms: 0,
        }
    }

    fn answer(t: &TrialDescriptor) -> ResponseSubmission {
        ResponseSubmission {
            trial_id: t.trial_id.clone(),
            rsvp_answer: Some(t.expected_rsvp()),
            afc_answer: Some(t.expected_afc()),
            latencies: None,
            fixation_ok: Some(true),
        }
    }

    fn issue(s: &mut Session, now: u64) -> TrialDescriptor {
        if let Some(e) = s.decide_next_trial(now).unwrap() {
            s.apply(&e).unwrap();
        }
        s.active_trial().unwrap().clone()
    }

    fn respond(s: &mut Session, sub: &ResponseSubmission, now: u64) -> ResponseOutcome {
        match s.decide_response(sub, now).unwrap() {
            Decision::Duplicate(o) => o,
            Decision::Record(e) => {
                s.apply(&e).unwrap();
                let SessionEvent::ResponseRecorded { outcome, .. } = e else { unreachable!() };
                outcome
            }
        }
    }

    #[test]
    fn next_trial_is_idempotent_while_active() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(3))).unwrap();
        let a = issue(&mut s, 10);
        assert!(s.decide_next_trial(20).unwrap().is_none());
        assert_eq!(issue(&mut s, 30), a);
        assert_eq!(s.trials_issued(), 1);
    }

    #[test]
    fn first_trial_sits_at_prior_mean() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(3))).unwrap();
        let t = issue(&mut s, 0);
        assert!((t.intensity.log10() + 1.5).abs() < 1e-12);
        let StimulusPayload::GaborPair { left, right } = t.stimulus else { panic!() };
        assert_eq!(left.contrast, t.intensity);
        assert_eq!(left.center_deg.0, -right.center_deg.0);
    }

    #[test]
    fn phases_follow_the_clock() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(1))).unwrap();
        let t = issue(&mut s, 1000);
        assert_eq!(s.phase(1000), Phase::Fixation);
        assert_eq!(s.phase(1000 + 1200), Phase::Stimulus);
        assert_eq!(s.phase(1000 + 1700), Phase::Mask);
        assert_eq!(s.phase(1000 + 2700), Phase::Response);
        assert_eq!(t.timing.deadline(), 2700 + 10_000 + 250);
    }

    #[test]
    fn accepted_response_updates_staircase() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(5))).unwrap();
        let t = issue(&mut s, 0);
        let o = respond(&mut s, &answer(&t), 3000);
        assert_eq!(o.status, ResponseStatus::Accepted);
        assert_eq!(o.correct, Some(true));
        assert_eq!(s.staircase().trial_count(), 1);
        assert!(s.active_trial().is_none());
    }

    #[test]
    fn late_or_missing_answers_replay_the_intensity() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(5))).unwrap();
        let t = issue(&mut s, 0);
        let o = respond(&mut s, &answer(&t), t.timing.deadline() + 1);
        assert_eq!(o.status, ResponseStatus::Replay);
        assert!(o.timed_out);
        assert_eq!(s.staircase().trial_count(), 0);
        let again = issue(&mut s, 20_000);
        assert_eq!(again.intensity, t.intensity);
        assert_eq!(again.repeat_of.as_deref(), Some(t.trial_id.as_str()));

        let mut sub = answer(&again);
        sub.afc_answer = None;
        assert_eq!(respond(&mut s, &sub, 21_000).status, ResponseStatus::Replay);
    }

    #[test]
    fn response_at_deadline_is_in_time() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(5))).unwrap();
        let t = issue(&mut s, 0);
        assert_eq!(respond(&mut s, &answer(&t), t.timing.deadline()).status, ResponseStatus::Accepted);
    }

    #[test]
    fn csf_wrong_rsvp_still_counts() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(5))).unwrap();
        let t = issue(&mut s, 0);
        let mut sub = answer(&t);
        sub.rsvp_answer = Some(t.expected_rsvp().other());
        let o = respond(&mut s, &sub, 3000);
        assert_eq!(o.status, ResponseStatus::Accepted);
        assert_eq!(o.rsvp_correct, Some(false));
    }

    #[test]
    fn foveation_wrong_rsvp_restarts_step() {
        let mut s = Session::from_created(&created(StudyConfig::foveation().with_seed(5))).unwrap();
        let t = issue(&mut s, 0);
        assert!(matches!(t.stimulus, StimulusPayload::SplitScreen { .. }));
        let mut sub = answer(&t);
        sub.rsvp_answer = Some(t.expected_rsvp().other());
        let o = respond(&mut s, &sub, 3000);
        assert_eq!(o.status, ResponseStatus::RestartStep);
        assert_eq!(s.staircase().trial_count(), 0);
        assert_eq!(issue(&mut s, 4000).intensity, t.intensity);
    }

    #[test]
    fn duplicates_and_stale_ids() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(5))).unwrap();
        let t = issue(&mut s, 0);
        let first = respond(&mut s, &answer(&t), 3000);
        let dup = respond(&mut s, &answer(&t), 4000);
        assert!(dup.duplicate);
        assert_eq!(ResponseOutcome { duplicate: false, ..dup }, first);
        assert_eq!(s.staircase().trial_count(), 1);

        issue(&mut s, 5000);
        let mut bogus = answer(&t);
        bogus.trial_id = "nope".into();
        assert!(matches!(s.decide_response(&bogus, 6000), Err(Error::StaleTrial { .. })));
    }

    #[test]
    fn full_session_completes_and_replays() {
        let mut cfg = StudyConfig::csf().with_seed(9);
        cfg.stimuli = vec![1];
        cfg.repetitions = 1;
        cfg.quest.max_trials = 5;
        let created = created(cfg);
        let mut s = Session::from_created(&created).unwrap();
        let mut log = vec![created];
        let mut now = 0;
        while !s.is_done() {
            let e = s.decide_next_trial(now).unwrap().unwrap();
            s.apply(&e).unwrap();
            log.push(e);
            let t = s.active_trial().unwrap().clone();
            let Decision::Record(e) = s.decide_response(&answer(&t), now + 3000).unwrap() else { panic!() };
            s.apply(&e).unwrap();
            log.push(e);
            now += 5000;
        }
        assert_eq!(s.completed().len(), 3);
        assert_eq!(s.phase(now), Phase::Done);
        assert!(matches!(s.decide_next_trial(now), Err(Error::SessionDone(_))));
        let rows = s.results();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.repetitions == 1 && r.value > 0.0));
        assert_eq!(s.threshold_samples().len(), 3);
        assert_eq!(Session::replay(&log).unwrap(), s);
    }

    #[test]
    fn out_of_order_events_are_rejected() {
        let mut s = Session::from_created(&created(StudyConfig::csf().with_seed(5))).unwrap();
        let e = s.decide_next_trial(0).unwrap().unwrap();
        s.apply(&e).unwrap();
        assert!(s.apply(&e).is_err());
    }
}
