use attnfov::bandwidth::{DisplayProfile, computational_gain};
use attnfov::csf::{StimulusReference, interpolate};
use attnfov::fit::{
    ThresholdSample, Weighting, baseline_adjust, fit_per_condition, fit_unified, samples_from_cells,
    UnifiedFitOptions,
};
use attnfov::foveation::blur_sigma;
use attnfov::reference_data::main_study_cells;
use attnfov::stimulus::{RsvpSpec, rsvp_sequence};
use attnfov::{
    AttentionLevel, AttentionModel, CorticalMagnification, DisplayGeometry, Eccentricity, FoveationConfig, MarModel,
    QuestConfig, StaircaseState,
};
use proptest::prelude::*;

fn ecc(e: f64) -> Eccentricity {
    Eccentricity::new(e).unwrap()
}

proptest! {
    #[test]
    fn thresholds_and_gains_increase_with_eccentricity(a in 7.0f64..21.0, b in 7.0f64..21.0) {
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let m = AttentionModel::published();
        for att in [AttentionLevel::Medium, AttentionLevel::High] {
            prop_assert!(m.threshold(att, ecc(lo)).value < m.threshold(att, ecc(hi)).value);
            prop_assert!(m.gain(att, ecc(lo)).unwrap().value < m.gain(att, ecc(hi)).unwrap().value);
        }
    }

    #[test]
    fn attention_orders_thresholds(e in 7.0f64..=21.0) {
        let m = AttentionModel::published();
        let t = |a| m.threshold(a, ecc(e)).value;
        prop_assert!(t(AttentionLevel::High) > t(AttentionLevel::Medium));
        prop_assert!(t(AttentionLevel::Medium) > t(AttentionLevel::Low));
    }

    #[test]
    fn interpolation_hits_endpoints(alpha in -1e3f64..1e3, beta in -1e3f64..1e3) {
        prop_assert_eq!(interpolate(alpha, beta, 0.0), alpha);
        prop_assert_eq!(interpolate(alpha, beta, 1.0), beta);
    }

    #[test]
    fn stimulus_scaling_round_trips(e in 0.0f64..60.0, f in 0.1f64..20.0, d in 0.1f64..20.0, e_ref in 0.0f64..60.0) {
        let cm = CorticalMagnification::default();
        let reference = StimulusReference { eccentricity: ecc(e_ref), frequency: f, diameter: d };
        let there = cm.scale_stimulus(&reference, ecc(e));
        let back = cm.scale_stimulus(
            &StimulusReference { eccentricity: ecc(e), frequency: there.frequency, diameter: there.diameter },
            ecc(e_ref),
        );
        prop_assert!((back.frequency - f).abs() <= 8.0 * f64::EPSILON * f);
        prop_assert!((back.diameter - d).abs() <= 8.0 * f64::EPSILON * d);
    }

    #[test]
    fn per_condition_fit_ignores_order_and_duplication(seed in any::<u64>()) {
        let samples = samples_from_cells(&main_study_cells());
        let mut shuffled = samples.clone();
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let doubled: Vec<_> = samples.iter().chain(&samples).cloned().collect();
        for w in [Weighting::CellMeans, Weighting::PerSample] {
            for a in AttentionLevel::ALL {
                let base = fit_per_condition(&samples, a, w).unwrap().parameters;
                for other in [&shuffled, &doubled] {
                    let p = fit_per_condition(other, a, w).unwrap().parameters;
                    prop_assert!((p.p0 - base.p0).abs() <= 1e-12 * base.p0.abs().max(1e-3));
                    prop_assert!((p.p1 - base.p1).abs() <= 1e-12 * base.p1.abs().max(1e-3));
                }
            }
        }
    }

    #[test]
    fn baseline_adjustment_preserves_gains(
        lows in prop::collection::vec(0.01f64..0.2, 1..6),
        ratios in prop::collection::vec(1.0f64..6.0, 6),
        baseline in 0.01f64..0.1,
    ) {
        let mut samples = Vec::new();
        for (k, low) in lows.iter().enumerate() {
            let id = format!("s{k}");
            samples.push(ThresholdSample::new(id.clone(), 15.0, AttentionLevel::Low, *low, 0));
            samples.push(ThresholdSample::new(id, 15.0, AttentionLevel::High, low * ratios[k], 0));
        }
        let adj = baseline_adjust(&samples, baseline).unwrap();
        for pair in samples.chunks(2).zip(adj.samples.chunks(2)) {
            let before = pair.0[1].contrast / pair.0[0].contrast;
            let after = pair.1[1].contrast / pair.1[0].contrast;
            prop_assert!((before - after).abs() <= 2.0 * f64::EPSILON * before);
            prop_assert!((pair.1[0].contrast - baseline).abs() <= 2.0 * f64::EPSILON * baseline);
        }
    }

    #[test]
    fn pixel_angles_round_trip(x in 0.0f64..3266.0, y in 0.0f64..1420.0) {
        let g = DisplayGeometry::study_default();
        let (ax, ay) = g.pixel_to_angles(x, y);
        let (px, py) = g.angles_to_pixel(ax, ay);
        let (bx, by) = g.pixel_to_angles(px, py);
        prop_assert!((bx - ax).abs() < 1e-9 && (by - ay).abs() < 1e-9);
        let r = g.eccentricity_to_offset(g.pixel_to_eccentricity(x, y));
        prop_assert!((g.offset_to_eccentricity(r) - g.pixel_to_eccentricity(x, y)).abs() < 1e-9);
    }

    #[test]
    fn blur_grows_with_slope(m1 in 0.0f64..2.0, dm in 0.0f64..2.0, e in 0.0f64..60.0) {
        let cfg = FoveationConfig::for_display(&DisplayGeometry::study_default());
        let a = blur_sigma(&MarModel::new(m1).unwrap(), &cfg, e);
        let b = blur_sigma(&MarModel::new(m1 + dm).unwrap(), &cfg, e);
        prop_assert!(b >= a);
    }

    #[test]
    fn computational_gain_is_at_least_one_and_symmetric(
        w in 5.0f64..120.0,
        h in 5.0f64..120.0,
        ppd in 10.0f64..80.0,
        m in 0.0f64..0.08,
    ) {
        let model = MarModel::new(m).unwrap();
        let psi = computational_gain(&DisplayProfile::new((w, h), ppd), &model).unwrap();
        prop_assert!(psi >= 1.0);
        let swapped = computational_gain(&DisplayProfile::new((h, w), ppd), &model).unwrap();
        prop_assert!((psi - swapped).abs() <= 2e-3 * psi);
        // ω never exceeds ω_s inside the field: no savings at all.
        let corner = (w / 2.0).hypot(h / 2.0);
        if model.mar(corner) <= 2.0 / ppd {
            prop_assert_eq!(psi, 1.0);
        }
    }

    #[test]
    fn posterior_stays_proper(trials in prop::collection::vec((1e-3f64..1.0, any::<bool>()), 1..40)) {
        let mut s = StaircaseState::new(QuestConfig::default()).unwrap();
        for (x, c) in trials {
            s.update(x, c).unwrap();
            let total: f64 = s.posterior().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(s.posterior().iter().all(|p| *p >= 0.0 && p.is_finite()));
        }
    }

    #[test]
    fn identical_responses_give_identical_trajectories(seed in any::<u64>(), t in 0.01f64..0.5) {
        let cfg = QuestConfig::default();
        let (a, sa) = attnfov::quest::run_simulation(&cfg, t, seed).unwrap();
        let (b, sb) = attnfov::quest::run_simulation(&cfg, t, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(sa.history(), sb.history());
        let bits = |s: &StaircaseState| s.posterior().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&sa), bits(&sb));
    }
}

#[test]
fn unified_fit_stays_within_fifteen_percent_of_cells() {
    let samples = samples_from_cells(&main_study_cells());
    let model = fit_unified(&samples, UnifiedFitOptions::default()).unwrap().parameters;
    for (e, a, t) in main_study_cells() {
        let u = model.threshold(ecc(e), a.as_continuous()).unwrap().value;
        assert!(((u - t) / t).abs() < 0.15, "{e} {a}: {u} vs {t}");
    }
}

#[test]
fn rsvp_targets_are_uniform_and_colours_alternate() {
    let spec = RsvpSpec::new(6);
    let allowed = spec.allowed_target_indices().unwrap();
    let mut counts = vec![0usize; 6];
    for seed in 0..10_000u64 {
        let s = rsvp_sequence(&spec, seed).unwrap();
        counts[s.target_index] += 1;
        for w in s.items.windows(2) {
            assert_ne!(w[0].color, w[1].color);
            assert_ne!(w[0].letter, w[1].letter);
        }
    }
    let k = allowed.len() as f64;
    let expected = 10_000.0 / k;
    let chi2: f64 = allowed.clone().map(|i| (counts[i] as f64 - expected).powi(2) / expected).sum();
    assert!(counts[..allowed.start].iter().all(|c| *c == 0));
    // 99.9th percentile of χ² with 3 degrees of freedom.
    assert!(chi2 < 16.27, "χ² {chi2} for {counts:?}");
}
