use attnfov::quality::{
    PredictorConfig, bisect_largest, optimize_mar_slope, predict_quality, predict_quality_baseline, quality_at_slope,
};
use attnfov::reference_data::MAR_SLOPES;
use attnfov::scenes::{SCENE_NAMES, scene, scene_geometry};
use attnfov::{AttentionLevel, FoveationConfig, MarModel};
use rayon::prelude::*;

#[test]
fn quality_never_rises_with_slope() {
    let geom = scene_geometry();
    let fov = FoveationConfig::for_display(&geom);
    let cfg = PredictorConfig::default().with_attention(AttentionLevel::Medium);
    let grid: Vec<f64> = (0..16).map(|k| 0.01 * k as f64).collect();
    for name in SCENE_NAMES {
        let img = scene(name).unwrap();
        let q: Vec<f64> = grid
            .par_iter()
            .map(|&m| quality_at_slope(&img, &geom, &cfg, &fov, m).unwrap().jod)
            .collect();
        assert_eq!(q[0], 10.0, "{name}");
        for (k, w) in q.windows(2).enumerate() {
            assert!(w[1] <= w[0], "{name}: Q({}) = {} > Q({}) = {}", grid[k + 1], w[1], grid[k], w[0]);
        }
    }
}

#[test]
fn bisection_brackets_the_threshold() {
    let geom = scene_geometry();
    let fov = FoveationConfig::for_display(&geom);
    let cfg = PredictorConfig::default().with_attention(AttentionLevel::High);
    let img = scene("tulips").unwrap();
    let q_thr = quality_at_slope(&img, &geom, &cfg, &fov, 0.05).unwrap().jod;
    let found = optimize_mar_slope(&img, &geom, &cfg, &fov, q_thr, (0.0, 0.5)).unwrap();
    let tol = 1e-4;
    assert!(found.quality >= q_thr);
    assert!(quality_at_slope(&img, &geom, &cfg, &fov, found.slope + 2.0 * tol).unwrap().jod < q_thr);
    assert!((found.slope - 0.05).abs() < 2.0 * tol);
}

#[test]
fn low_attention_is_the_baseline_predictor() {
    let geom = scene_geometry();
    let cfg = PredictorConfig::default().with_attention(AttentionLevel::Low);
    for name in SCENE_NAMES {
        let img = scene(name).unwrap();
        let test = attnfov::foveation::foveate_image(
            &img,
            &geom,
            &MarModel::new(0.04).unwrap(),
            &FoveationConfig::for_display(&geom),
        )
        .unwrap();
        let a = predict_quality(&img, &test, &geom, &cfg).unwrap().jod;
        let b = predict_quality_baseline(&img, &test, &geom, &cfg).unwrap().jod;
        assert_eq!(a.to_bits(), b.to_bits(), "{name}");
    }
}

#[test]
fn slopes_order_with_attention_at_a_shared_threshold() {
    let geom = scene_geometry();
    let fov = FoveationConfig::for_display(&geom);
    let base = PredictorConfig::default();
    for (name, measured) in MAR_SLOPES {
        let img = scene(name).unwrap();
        let q_thr = quality_at_slope(&img, &geom, &base, &fov, measured[1]).unwrap().jod;
        let m: Vec<f64> = AttentionLevel::ALL
            .par_iter()
            .map(|&a| optimize_mar_slope(&img, &geom, &base.with_attention(a), &fov, q_thr, (0.0, 0.5)).unwrap().slope)
            .collect();
        assert!(m[2] >= m[1] && m[1] >= m[0], "{name}: {m:?}");
    }
}

#[test]
fn bisection_reports_infeasible_and_saturated_brackets() {
    let q = |m: f64| Ok(10.0 - m);
    assert!(matches!(bisect_largest(q, 1.0, 2.0, 9.5, 1e-3), Err(attnfov::Error::Infeasible { .. })));
    assert_eq!(bisect_largest(q, 0.0, 0.2, 9.5, 1e-3).unwrap().slope, 0.2);
    assert!(bisect_largest(q, 0.2, 0.2, 9.5, 1e-3).is_err());
}
