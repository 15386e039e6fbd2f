use std::fs::File;
use std::io;

use anyhow::{bail, Context, Result};
use attnfov::bandwidth::{gain_sweep_with, write_sweep_csv};
use attnfov::fit::{fit_attention_model, fit_unified, read_samples_csv, UnifiedFitOptions, Weighting};
use attnfov::foveation::foveate_image;
use attnfov::quality::{optimize_mar_slope, predict_quality, PredictorConfig};
use attnfov::quest::run_simulation;
use attnfov::reference_data::{self, mean_mar_slope};
use attnfov::scenes::{scene_geometry, SCENE_NAMES};
use attnfov::stimulus::{encode_display, gabors_image, render_letter, rsvp_sequence, GaborSpec, RsvpItem, RsvpSpec};
use attnfov::{
    textfmt, AttentionLevel, AttentionModel, Eccentricity, FoveationConfig, MarModel, QuestConfig, UnifiedModel,
};
use serde::{Deserialize, Serialize};

use crate::{
    BandwidthArgs, FitArgs, FoveateArgs, GaborArgs, GainArgs, ModelKind, OptimizeArgs, Placement, PredictArgs,
    RsvpArgs, SceneArgs, ServeArgs, SimulateArgs,
};

/// Fit statistics of one model component.
#[derive(Debug, Serialize, Deserialize)]
struct FitStats {
    component: String,
    r_squared: f64,
    adjusted_r_squared: f64,
    points: usize,
    residual_sum_of_squares: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct FitOutput<M> {
    kind: String,
    weighting: Weighting,
    model: M,
    fits: Vec<FitStats>,
}

/// Only the `model` table of a saved fit report.
#[derive(Deserialize)]
struct ModelOnly<M> {
    model: M,
}

enum AttentionArg {
    Level(AttentionLevel),
    Continuous(f64),
}

fn parse_attention(text: &str) -> Result<AttentionArg> {
    if let Ok(a) = text.parse::<AttentionLevel>() {
        return Ok(AttentionArg::Level(a));
    }
    match text.trim().parse::<f64>() {
        Ok(a_c) if (0.0..=1.0).contains(&a_c) => Ok(AttentionArg::Continuous(a_c)),
        _ => bail!("attention must be low, medium, high or a number in [0, 1], got {text:?}"),
    }
}

pub fn gain(args: GainArgs) -> Result<()> {
    let attention = args.attention.iter().map(|a| parse_attention(a)).collect::<Result<Vec<_>>>()?;
    let needs_unified = attention.iter().any(|a| matches!(a, AttentionArg::Continuous(_)));
    let (levels, unified) = match &args.params {
        None => (AttentionModel::published(), UnifiedModel::published()),
        Some(path) if needs_unified => {
            let m: ModelOnly<UnifiedModel> = textfmt::read_file(path)?;
            m.model.validate()?;
            (AttentionModel::published(), m.model)
        }
        Some(path) => {
            let m: ModelOnly<AttentionModel> = textfmt::read_file(path)?;
            (m.model, UnifiedModel::published())
        }
    };

    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["attention", "eccentricity_deg", "threshold", "gain", "extrapolated"])?;
    for (label, a) in args.attention.iter().zip(&attention) {
        for &e in &args.eccentricity {
            let ecc = Eccentricity::new(e)?;
            let (t, g) = match a {
                AttentionArg::Level(level) => (levels.threshold(*level, ecc), levels.gain(*level, ecc)?),
                AttentionArg::Continuous(a_c) => (unified.threshold(ecc, *a_c)?, unified.gain(ecc, *a_c)?),
            };
            w.write_record([
                label.trim().to_string(),
                e.to_string(),
                t.value.to_string(),
                g.value.to_string(),
                t.extrapolated.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn fit(args: FitArgs) -> Result<()> {
    let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let samples = read_samples_csv(file)?;
    let weighting = if args.per_sample {
        Weighting::PerSample
    } else {
        Weighting::CellMeans
    };

    let (text, predicted): (String, Vec<f64>) = match args.model {
        ModelKind::PerCondition => {
            let (model, reports) = fit_attention_model(&samples, weighting)?;
            let fits = reports
                .iter()
                .map(|r| FitStats {
                    component: r.parameters.attention.to_string(),
                    r_squared: r.r_squared,
                    adjusted_r_squared: r.dof_adjusted_r_squared,
                    points: r.points,
                    residual_sum_of_squares: r.residual_sum_of_squares,
                })
                .collect();
            let predicted = samples
                .iter()
                .map(|s| Ok(model.threshold(s.attention, Eccentricity::new(s.eccentricity)?).value))
                .collect::<Result<_>>()?;
            let out = FitOutput {
                kind: "per-condition".into(),
                weighting,
                model,
                fits,
            };
            (textfmt::to_text(&out)?, predicted)
        }
        ModelKind::Unified => {
            let report = fit_unified(
                &samples,
                UnifiedFitOptions {
                    weighting,
                    ..UnifiedFitOptions::default()
                },
            )?;
            let model = report.parameters;
            let predicted = samples
                .iter()
                .map(|s| Ok(model.threshold(Eccentricity::new(s.eccentricity)?, s.attention.as_continuous())?.value))
                .collect::<Result<_>>()?;
            let out = FitOutput {
                kind: "unified".into(),
                weighting,
                model,
                fits: vec![FitStats {
                    component: "unified".into(),
                    r_squared: report.r_squared,
                    adjusted_r_squared: report.dof_adjusted_r_squared,
                    points: report.points,
                    residual_sum_of_squares: report.residual_sum_of_squares,
                }],
            };
            (textfmt::to_text(&out)?, predicted)
        }
    };

    print!("{text}");
    if let Some(path) = &args.report {
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.residuals {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["subject", "eccentricity_deg", "attention", "contrast", "repetition", "predicted", "residual"])?;
        for (s, p) in samples.iter().zip(&predicted) {
            w.write_record([
                s.subject_id.clone(),
                s.eccentricity.to_string(),
                s.attention.to_string(),
                s.contrast.to_string(),
                s.repetition.to_string(),
                p.to_string(),
                (s.contrast - p).to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn gabor(args: GaborArgs) -> Result<()> {
    let row = match args.stimulus {
        Some(n) => Some(reference_data::stimulus(n).with_context(|| format!("unknown stimulus number {n}"))?),
        None => None,
    };
    let pick = |explicit: Option<f64>, from_row: Option<f64>, name: &str| {
        explicit
            .or(from_row)
            .with_context(|| format!("--{name} is required without --stimulus"))
    };
    let e = pick(args.eccentricity, row.map(|r| r.eccentricity), "eccentricity")?;
    let diameter = pick(args.diameter, row.map(|r| r.diameter), "diameter")?;
    let frequency = pick(args.frequency, row.map(|r| r.frequency), "frequency")?;
    let geom = args.display.full()?;
    let luminance = args
        .luminance
        .or(row.map(|r| r.adaptation_luminance))
        .unwrap_or(geom.background_luminance);

    let patch = |x: f64| GaborSpec::from_diameter((x, 0.0), args.orientation, diameter, frequency, args.contrast, luminance);
    let specs = match args.side {
        Placement::Left => vec![patch(-e)],
        Placement::Right => vec![patch(e)],
        Placement::Both => vec![patch(-e), patch(e)],
    };
    let frame = encode_display(&gabors_image(&specs, &geom)?, &geom)?;
    frame.write_png(&args.out)?;
    #[derive(Serialize)]
    struct Record<'a> {
        patches: &'a [GaborSpec],
    }
    print!("{}", textfmt::to_text(&Record { patches: &specs })?);
    Ok(())
}

pub fn rsvp(args: RsvpArgs) -> Result<()> {
    let spec = match (args.attention.as_deref(), args.letters) {
        (Some(a), _) => RsvpSpec::for_attention(a.parse()?),
        (None, Some(n)) => RsvpSpec::new(n),
        (None, None) => bail!("either --attention or --letters is required"),
    };
    let schedule = rsvp_sequence(&spec, args.seed)?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        let geom = args.display.full()?;
        for (i, item) in schedule.items.iter().enumerate() {
            let path = dir.join(format!("{i:02}-{}.png", item.letter));
            render_letter(item, &spec, &geom)?
                .save(&path)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    #[derive(Serialize)]
    struct Record<'a> {
        spec: &'a RsvpSpec,
        target_index: usize,
        items: &'a [RsvpItem],
    }
    print!(
        "{}",
        textfmt::to_text(&Record {
            spec: &spec,
            target_index: schedule.target_index,
            items: &schedule.items,
        })?
    );
    Ok(())
}

pub fn foveate(args: FoveateArgs) -> Result<()> {
    let (img, geom) = args.display.load(&args.image)?;
    let mut cfg = FoveationConfig::for_display(&geom);
    cfg.gaze_center = args.gaze;
    let out = foveate_image(&img, &geom, &MarModel::new(args.slope)?, &cfg)?;
    encode_display(&out, &geom)?.write_png(&args.out)?;
    Ok(())
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let (reference, geom) = args.display.load(&args.reference)?;
    let (test, _) = args.display.load(&args.test)?;
    let cfg = PredictorConfig::default().with_attention(args.attention);
    let q = predict_quality(&reference, &test, &geom, &cfg)?;
    println!("attention,jod");
    println!("{},{}", args.attention, q.jod);
    Ok(())
}

pub fn optimize_slope(args: OptimizeArgs) -> Result<()> {
    let (img, geom) = args.display.load(&args.image)?;
    let cfg = PredictorConfig::default().with_attention(args.attention);
    let search = optimize_mar_slope(
        &img,
        &geom,
        &cfg,
        &FoveationConfig::for_display(&geom),
        args.qthr,
        args.bracket,
    )?;
    println!("slope = {}", search.slope);
    println!("quality = {}", search.quality);
    println!();
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["m", "quality"])?;
    for (m, q) in &search.trace {
        w.write_record([m.to_string(), q.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_slope(text: &str) -> Result<(String, MarModel)> {
    let name = text.trim().to_string();
    let model = match name.parse::<AttentionLevel>() {
        Ok(a) => MarModel::new(mean_mar_slope(a))?,
        Err(_) => MarModel::new(name.parse().with_context(|| format!("bad slope {name:?}"))?)?,
    };
    Ok((name, model))
}

pub fn bandwidth(args: BandwidthArgs) -> Result<()> {
    if !(args.fov_step > 0.0 && args.fov_min > 0.0 && args.fov_min <= args.fov_max) {
        bail!("field-of-view range must satisfy 0 < min <= max and step > 0");
    }
    let count = ((args.fov_max - args.fov_min) / args.fov_step + 1e-9).floor() as usize + 1;
    let fovs: Vec<f64> = (0..count).map(|i| args.fov_min + i as f64 * args.fov_step).collect();
    let models = args.slopes.iter().map(|s| parse_slope(s)).collect::<Result<Vec<_>>>()?;
    let rows = gain_sweep_with(&fovs, &args.ppd, &models, args.omega_s)?;
    match &args.out {
        Some(path) => write_sweep_csv(File::create(path)?, &rows)?,
        None => write_sweep_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let config: QuestConfig = match &args.config {
        Some(path) => textfmt::read_file(path)?,
        None => QuestConfig::default(),
    };
    let (estimate, state) = run_simulation(&config, args.true_threshold, args.seed)?;
    print!("{}", textfmt::to_text(&estimate)?);
    if args.trials {
        println!();
        let mut w = csv::Writer::from_writer(io::stdout().lock());
        w.write_record(["trial", "intensity", "correct"])?;
        for (i, t) in state.history().iter().enumerate() {
            w.write_record([(i + 1).to_string(), t.intensity.to_string(), t.correct.to_string()])?;
        }
        w.flush()?;
    }
    if let Some(path) = &args.state_out {
        textfmt::write_file(path, &state)?;
    }
    Ok(())
}

pub fn scene(args: SceneArgs) -> Result<()> {
    let img = attnfov::scenes::scene(&args.name)
        .with_context(|| format!("unknown scene {:?}; available: {}", args.name, SCENE_NAMES.join(", ")))?;
    encode_display(&img, &scene_geometry())?.write_png(&args.out)?;
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => attnfov_service::ServiceConfig::from_file(path)?,
        None => attnfov_service::ServiceConfig::default(),
    }
    .with_env();
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(attnfov_service::serve(config))
}
