use std::collections::BTreeSet;
use std::sync::Arc;
use std::thread;

use attnfov::study::{
    AfcAnswer, Condition, EventStore, JsonlStore, ManualClock, MemoryStore, ResponseStatus, ResponseSubmission,
    SessionEvent, SessionManager, StimulusPayload, StudyConfig, TrialDescriptor, build_plan, render_trial,
};
use attnfov::{AttentionLevel, DisplayGeometry, Error};
use proptest::prelude::*;

fn answer(t: &TrialDescriptor, correct: bool) -> ResponseSubmission {
    let afc = match (t.expected_afc(), correct) {
        (a, true) => a,
        (AfcAnswer::Same, false) => AfcAnswer::Different,
        (AfcAnswer::Different, false) => AfcAnswer::Same,
        (AfcAnswer::Left, false) => AfcAnswer::Right,
        (AfcAnswer::Right, false) => AfcAnswer::Left,
    };
    ResponseSubmission {
        trial_id: t.trial_id.clone(),
        rsvp_answer: Some(t.expected_rsvp()),
        afc_answer: Some(afc),
        latencies: None,
        fixation_ok: Some(true),
    }
}

fn manager() -> (SessionManager, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::new(1_000_000));
    (SessionManager::new(Arc::new(MemoryStore::new()), clock.clone()), clock)
}

#[test]
fn attention_order_holds_in_a_thousand_plans() {
    for seed in 0..1000u64 {
        for config in [StudyConfig::csf(), StudyConfig::foveation()] {
            let subject = format!("p{}", seed % 37);
            let plan = build_plan(&subject, &config, seed).unwrap();
            let per_condition = 3 * config.repetitions as usize;
            assert_eq!(plan.len(), config.conditions().len() * per_condition);
            let mut seen = BTreeSet::new();
            for block in plan.chunks(per_condition) {
                assert!(seen.insert(block[0].condition.clone()), "condition revisited");
                assert!(block.iter().all(|e| e.condition == block[0].condition));
                assert!(block.windows(2).all(|w| w[0].attention <= w[1].attention));
                assert_eq!(block[0].attention, AttentionLevel::Low);
            }
        }
    }
}

#[test]
fn condition_order_varies_between_subjects() {
    let config = StudyConfig::csf();
    let orders: BTreeSet<Vec<Condition>> = (0..20)
        .map(|k| {
            build_plan(&format!("p{k}"), &config, 1)
                .unwrap()
                .iter()
                .step_by(6)
                .map(|e| e.condition.clone())
                .collect()
        })
        .collect();
    assert!(orders.len() > 1);
}

#[test]
fn duplicate_submissions_update_once() {
    let (mgr, clock) = manager();
    let id = mgr.create_session("p01", StudyConfig::csf().with_seed(2)).unwrap().session_id;
    let t = mgr.next_trial(&id).unwrap();
    clock.advance(3000);
    let sub = answer(&t, true);
    let first = mgr.submit_response(&id, &sub).unwrap();
    for _ in 0..5 {
        let again = mgr.submit_response(&id, &sub).unwrap();
        assert!(again.duplicate);
        assert_eq!(again.status, first.status);
    }
    assert_eq!(mgr.snapshot(&id).unwrap().staircase().trial_count(), 1);
}

#[test]
fn concurrent_duplicates_update_once() {
    let (mgr, clock) = manager();
    let mgr = Arc::new(mgr);
    let id = mgr.create_session("p01", StudyConfig::csf().with_seed(4)).unwrap().session_id;
    for _ in 0..10 {
        let t = mgr.next_trial(&id).unwrap();
        clock.advance(3000);
        let sub = answer(&t, true);
        let outcomes: Vec<_> = (0..8)
            .map(|_| {
                let (mgr, id, sub) = (mgr.clone(), id.clone(), sub.clone());
                thread::spawn(move || mgr.submit_response(&id, &sub).unwrap())
            })
            .collect::<Vec<_>>()
            .into_iter()
            .map(|h| h.join().unwrap())
            .collect();
        assert_eq!(outcomes.iter().filter(|o| !o.duplicate).count(), 1);
    }
    assert_eq!(mgr.snapshot(&id).unwrap().staircase().trial_count(), 10);
}

#[test]
fn sessions_progress_independently_in_parallel() {
    let (mgr, _) = manager();
    let mgr = Arc::new(mgr);
    let ids: Vec<String> = (0..6)
        .map(|k| {
            let mut cfg = StudyConfig::csf().with_seed(k);
            cfg.stimuli = vec![1];
            cfg.repetitions = 1;
            cfg.quest.max_trials = 4;
            mgr.create_session(&format!("p{k}"), cfg).unwrap().session_id
        })
        .collect();
    let handles: Vec<_> = ids
        .iter()
        .cloned()
        .map(|id| {
            let mgr = mgr.clone();
            thread::spawn(move || {
                while !mgr.summary(&id).unwrap().done {
                    let t = mgr.next_trial(&id).unwrap();
                    mgr.submit_response(&id, &answer(&t, true)).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    for id in &ids {
        let results = mgr.results(id).unwrap();
        assert!(results.done);
        assert_eq!(results.rows.len(), 3);
    }
}

#[test]
fn timeouts_replay_and_unknown_ids_are_rejected() {
    let (mgr, clock) = manager();
    let id = mgr.create_session("p01", StudyConfig::csf().with_seed(2)).unwrap().session_id;
    let t = mgr.next_trial(&id).unwrap();
    clock.advance(t.timing.deadline() + 1);
    let o = mgr.submit_response(&id, &answer(&t, true)).unwrap();
    assert_eq!(o.status, ResponseStatus::Replay);
    let replay = mgr.next_trial(&id).unwrap();
    assert_eq!(replay.intensity, t.intensity);
    assert_ne!(replay.trial_id, t.trial_id);

    assert!(matches!(mgr.next_trial("missing"), Err(Error::UnknownSession(_))));
    let stale = ResponseSubmission {
        trial_id: "bogus".into(),
        ..answer(&replay, true)
    };
    assert!(matches!(mgr.submit_response(&id, &stale), Err(Error::StaleTrial { .. })));
}

#[test]
fn foveation_restart_keeps_the_slope() {
    let (mgr, clock) = manager();
    let id = mgr.create_session("p02", StudyConfig::foveation().with_seed(8)).unwrap().session_id;
    let t = mgr.next_trial(&id).unwrap();
    clock.advance(3000);
    let mut sub = answer(&t, true);
    sub.rsvp_answer = sub.rsvp_answer.map(|c| c.other());
    assert_eq!(mgr.submit_response(&id, &sub).unwrap().status, ResponseStatus::RestartStep);
    let again = mgr.next_trial(&id).unwrap();
    let slope = |t: &TrialDescriptor| match &t.stimulus {
        StimulusPayload::SplitScreen { slope, .. } => *slope,
        other => panic!("{other:?}"),
    };
    assert_eq!(slope(&again), slope(&t));
    assert_eq!(again.repeat_of.as_deref(), Some(t.trial_id.as_str()));
}

#[test]
fn rendering_is_deterministic() {
    let (mgr, _) = manager();
    let geom = DisplayGeometry::study_default();
    let id = mgr.create_session("p03", StudyConfig::csf().with_seed(5)).unwrap().session_id;
    let t = mgr.next_trial(&id).unwrap();
    let a = render_trial(&t, &geom).unwrap();
    let b = mgr.render_active(&id, &geom).unwrap();
    assert_eq!(a, b);
    assert_eq!((a.width, a.height), (geom.resolution.0 as usize, geom.resolution.1 as usize));
    assert_eq!(a.png_bytes().unwrap(), b.png_bytes().unwrap());

    let fid = mgr.create_session("p03", StudyConfig::foveation().with_seed(5)).unwrap().session_id;
    let ft = mgr.next_trial(&fid).unwrap();
    assert_eq!(render_trial(&ft, &geom).unwrap(), render_trial(&ft, &geom).unwrap());
}

#[test]
fn csf_export_uses_the_fitting_schema() {
    let (mgr, _) = manager();
    let mut cfg = StudyConfig::csf().with_seed(3);
    cfg.quest.max_trials = 3;
    let id = mgr.create_session("p04", cfg).unwrap().session_id;
    let mut k = 0;
    while !mgr.summary(&id).unwrap().done {
        let t = mgr.next_trial(&id).unwrap();
        mgr.submit_response(&id, &answer(&t, k % 3 != 0)).unwrap();
        k += 1;
    }
    let results = mgr.results(&id).unwrap();
    assert!(results.rows.iter().all(|r| r.repetitions == 2 && r.values.len() == 2));
    for r in &results.rows {
        let geo = (r.values[0] * r.values[1]).sqrt();
        assert!((r.value - geo).abs() < 1e-12 * geo);
    }
    let csv = results.to_csv().unwrap();
    assert!(csv.starts_with("subject,eccentricity_deg,attention,contrast,repetition\n"));
    let samples = attnfov::fit::read_samples_csv(csv.as_bytes()).unwrap();
    assert_eq!(samples.len(), 9);
    assert!(matches!(mgr.next_trial(&id), Err(Error::SessionDone(_))));
}

#[test]
fn foveation_export_lists_slopes() {
    let (mgr, _) = manager();
    let mut cfg = StudyConfig::foveation().with_seed(3);
    cfg.quest.max_trials = 2;
    let id = mgr.create_session("p05", cfg).unwrap().session_id;
    while !mgr.summary(&id).unwrap().done {
        let t = mgr.next_trial(&id).unwrap();
        mgr.submit_response(&id, &answer(&t, true)).unwrap();
    }
    let csv = mgr.results(&id).unwrap().to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("image,attention,slope"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn jsonl_sessions_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let clock = Arc::new(ManualClock::new(0));
    let store = Arc::new(JsonlStore::open(dir.path()).unwrap());
    let mgr = SessionManager::new(store.clone(), clock.clone());
    let id = mgr.create_session("p06", StudyConfig::csf()).unwrap().session_id;
    for k in 0..7 {
        let t = mgr.next_trial(&id).unwrap();
        mgr.submit_response(&id, &answer(&t, k % 2 == 0)).unwrap();
    }
    let active = mgr.next_trial(&id).unwrap();
    let before = mgr.snapshot(&id).unwrap();
    // The drawn seed is persisted, so the plan and trials are reproducible.
    let events = store.load(&id).unwrap();
    assert!(matches!(&events[0], SessionEvent::Created { config, .. } if config.seed.is_some()));
    drop(mgr);

    let mgr = SessionManager::recover(store, clock).unwrap();
    assert_eq!(mgr.session_ids(), vec![id.clone()]);
    assert_eq!(mgr.snapshot(&id).unwrap(), before);
    assert_eq!(mgr.next_trial(&id).unwrap(), active);
}

#[test]
fn invalid_configurations_are_rejected() {
    let (mgr, _) = manager();
    let mut cfg = StudyConfig::csf();
    cfg.stimuli = vec![99];
    assert!(mgr.create_session("p", cfg).is_err());
    let mut cfg = StudyConfig::foveation();
    cfg.images = vec!["nowhere".into()];
    assert!(mgr.create_session("p", cfg).is_err());
    assert!(mgr.create_session("  ", StudyConfig::csf()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn response_order_does_not_matter_to_the_posterior(pattern in prop::collection::vec(any::<bool>(), 2..12)) {
        // The same multiset of (intensity, correct) pairs presented in two
        // orders yields bit-identical posteriors.
        let cfg = attnfov::QuestConfig::default();
        let trials: Vec<(f64, bool)> = pattern.iter().enumerate().map(|(i, c)| (0.02 + 0.01 * i as f64, *c)).collect();
        let mut a = attnfov::StaircaseState::new(cfg).unwrap();
        let mut b = attnfov::StaircaseState::new(cfg).unwrap();
        for &(x, c) in &trials {
            a.update(x, c).unwrap();
        }
        for &(x, c) in trials.iter().rev() {
            b.update(x, c).unwrap();
        }
        let bits = |s: &attnfov::StaircaseState| s.posterior().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }
}
