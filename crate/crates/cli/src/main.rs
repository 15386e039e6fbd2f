//! `attnfov` command-line tool.

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod display;

#[derive(Parser)]
#[command(name = "attnfov", version, about = "Attention-aware contrast sensitivity and foveation toolkit")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print thresholds and attention gains as CSV.
    Gain(GainArgs),
    /// Fit a threshold model to measured thresholds.
    Fit(FitArgs),
    /// Render study stimuli.
    #[command(subcommand)]
    Stimulus(StimulusCommand),
    /// Foveate an image around a gaze point.
    Foveate(FoveateArgs),
    /// Score a test image against a reference.
    Predict(PredictArgs),
    /// Find the largest MAR slope that keeps quality above a threshold.
    OptimizeSlope(OptimizeArgs),
    /// Sweep computational gain over fields of view and display densities.
    Bandwidth(BandwidthArgs),
    /// Run one staircase against a simulated observer.
    SimulateStaircase(SimulateArgs),
    /// Write one of the built-in test scenes as a PNG.
    Scene(SceneArgs),
    /// Run the study HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GainArgs {
    /// `low`, `medium`, `high` or a continuous attention coordinate in [0, 1].
    #[arg(long, value_delimiter = ',', required = true)]
    attention: Vec<String>,
    /// Eccentricities in degrees.
    #[arg(long, value_delimiter = ',', required = true)]
    eccentricity: Vec<f64>,
    /// Fit report whose `model` table replaces the published parameters.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModelKind {
    PerCondition,
    Unified,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns subject, eccentricity_deg, attention, contrast, repetition.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "per-condition")]
    model: ModelKind,
    /// Fit every sample instead of cell means.
    #[arg(long)]
    per_sample: bool,
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write per-sample predictions and residuals as CSV.
    #[arg(long)]
    residuals: Option<PathBuf>,
}

#[derive(Subcommand)]
enum StimulusCommand {
    /// Render a Gabor patch, or a left/right pair, as a display-encoded PNG.
    Gabor(GaborArgs),
    /// Draw an RSVP letter stream and optionally render its letters.
    Rsvp(RsvpArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Placement {
    Left,
    Right,
    Both,
}

#[derive(Args)]
struct GaborArgs {
    /// Take eccentricity, size, frequency and luminance from a study stimulus.
    #[arg(long)]
    stimulus: Option<u32>,
    #[arg(long)]
    eccentricity: Option<f64>,
    /// Nominal diameter, degrees.
    #[arg(long)]
    diameter: Option<f64>,
    /// Cycles per degree.
    #[arg(long)]
    frequency: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    contrast: f64,
    #[arg(long, default_value_t = 0.0)]
    orientation: f64,
    /// Mean luminance, cd/m².
    #[arg(long)]
    luminance: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    side: Placement,
    #[command(flatten)]
    display: DisplayArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RsvpArgs {
    /// Stream length follows the attention level.
    #[arg(long, conflicts_with = "letters")]
    attention: Option<String>,
    #[arg(long)]
    letters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Render each letter as `NN-L.png` into this directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    display: DisplayArgs,
}

/// Display geometry for image commands. Without either flag the geometry
/// is fitted to the image at 12 pixels per degree.
#[derive(Args, Clone)]
struct DisplayArgs {
    /// Display geometry as a key-value text file.
    #[arg(long, conflicts_with = "ppd")]
    display: Option<PathBuf>,
    #[arg(long)]
    ppd: Option<f64>,
}

#[derive(Args)]
struct FoveateArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    slope: f64,
    /// Gaze point in pixels as `x,y`; the image centre if omitted.
    #[arg(long, value_parser = parse_pair)]
    gaze: Option<(f64, f64)>,
    #[command(flatten)]
    display: DisplayArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "low")]
    attention: attnfov::AttentionLevel,
    #[command(flatten)]
    display: DisplayArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    attention: attnfov::AttentionLevel,
    /// Lowest acceptable quality, JOD.
    #[arg(long)]
    qthr: f64,
    /// Slope search interval as `lo,hi`.
    #[arg(long, value_parser = parse_pair, default_value = "0,0.5")]
    bracket: (f64, f64),
    #[command(flatten)]
    display: DisplayArgs,
}

#[derive(Args)]
struct BandwidthArgs {
    #[arg(long, default_value_t = 10.0)]
    fov_min: f64,
    #[arg(long, default_value_t = 180.0)]
    fov_max: f64,
    #[arg(long, default_value_t = 10.0)]
    fov_step: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [20.0, 60.0])]
    ppd: Vec<f64>,
    /// Attention levels (mean measured slopes) or numeric slopes.
    #[arg(long, value_delimiter = ',', default_values_t = ["low".to_string(), "medium".into(), "high".into()])]
    slopes: Vec<String>,
    /// Override the peak MAR, degrees.
    #[arg(long)]
    omega_s: Option<f64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    true_threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Staircase settings as a key-value text file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Save the final staircase state.
    #[arg(long)]
    state_out: Option<PathBuf>,
    /// Print every trial as CSV after the estimate.
    #[arg(long)]
    trials: bool,
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long)]
    name: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
}

fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text.split_once(',').ok_or_else(|| format!("expected two numbers as a,b, got {text:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli.command {
        Command::Gain(a) => commands::gain(a),
        Command::Fit(a) => commands::fit(a),
        Command::Stimulus(StimulusCommand::Gabor(a)) => commands::gabor(a),
        Command::Stimulus(StimulusCommand::Rsvp(a)) => commands::rsvp(a),
        Command::Foveate(a) => commands::foveate(a),
        Command::Predict(a) => commands::predict(a),
        Command::OptimizeSlope(a) => commands::optimize_slope(a),
        Command::Bandwidth(a) => commands::bandwidth(a),
        Command::SimulateStaircase(a) => commands::simulate(a),
        Command::Scene(a) => commands::scene(a),
        Command::Serve(a) => commands::serve(a),
    }
}
