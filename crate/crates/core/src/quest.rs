//! Bayesian adaptive staircase for two-alternative forced choice.
//!
//! The posterior over log10 threshold lives on a fixed grid. Each trial's
//! log-likelihood is kept and the posterior is rebuilt from the trials in a
//! canonical order, so it depends only on the multiset of responses and is
//! bit-for-bit reproducible regardless of arrival order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuestConfig {
    /// Weibull slope.
    pub beta: f64,
    /// Lapse rate.
    pub delta: f64,
    /// Guess rate.
    pub gamma: f64,
    /// Prior mean, log10 intensity.
    pub prior_mean: f64,
    /// Prior standard deviation, log10 units.
    pub prior_sd: f64,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_step: f64,
    pub max_trials: usize,
    /// Stop early once the posterior sd (log10) falls below this.
    pub sd_stop: Option<f64>,
    /// Smallest intensity the display can present.
    pub min_intensity: f64,
    pub max_intensity: f64,
}

impl Default for QuestConfig {
    fn default() -> Self {
        Self {
            beta: 3.5,
            delta: 0.02,
            gamma: 0.5,
            prior_mean: -1.5,
            prior_sd: 1.0,
            grid_min: -3.5,
            grid_max: 0.0,
            grid_step: 0.01,
            max_trials: 40,
            sd_stop: None,
            min_intensity: 1.0 / (255.0 * 4.0),
            max_intensity: 1.0,
        }
    }
}

impl QuestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::domain("Weibull slope", self.beta, "> 0"));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::domain("lapse rate", self.delta, "[0, 1)"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::domain("guess rate", self.gamma, "[0, 1)"));
        }
        if !(self.prior_sd > 0.0) {
            return Err(Error::domain("prior sd", self.prior_sd, "> 0"));
        }
        if !(self.grid_step > 0.0 && self.grid_max > self.grid_min) {
            return Err(Error::InvalidParameter(format!(
                "grid [{}, {}] step {} is empty",
                self.grid_min, self.grid_max, self.grid_step
            )));
        }
        if !(self.min_intensity > 0.0 && self.max_intensity >= self.min_intensity) {
            return Err(Error::InvalidParameter("intensity range is empty".into()));
        }
        if self.max_trials == 0 {
            return Err(Error::InvalidParameter("max_trials must be positive".into()));
        }
        Ok(())
    }

    /// Grid of candidate log10 thresholds, inclusive of both ends.
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.grid_max - self.grid_min) / self.grid_step).round() as usize;
        (0..=n).map(|i| self.grid_min + i as f64 * self.grid_step).collect()
    }

    /// Probability of a correct response at log10 intensity `x` for log10
    /// threshold `t`.
    pub fn p_correct(&self, x: f64, t: f64) -> f64 {
        let core = 1.0 - (1.0 - self.gamma) * (-(10f64.powf(self.beta * (x - t)))).exp();
        self.delta * self.gamma + (1.0 - self.delta) * core
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub intensity: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// `10^mean`.
    pub threshold: f64,
    pub mean_log10: f64,
    pub sd_log10: f64,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    config: QuestConfig,
    history: Vec<Trial>,
}

/// Staircase state. Serialises as its configuration and trial history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Snapshot", into = "Snapshot")]
pub struct StaircaseState {
    config: QuestConfig,
    grid: Vec<f64>,
    log_prior: Vec<f64>,
    history: Vec<Trial>,
    /// Per-trial log-likelihood over the grid, sorted by trial key.
    likelihoods: Vec<((u64, bool), Vec<f64>)>,
    posterior: Vec<f64>,
}

impl TryFrom<Snapshot> for StaircaseState {
    type Error = Error;

    fn try_from(s: Snapshot) -> Result<Self> {
        let mut state = StaircaseState::new(s.config)?;
        for t in s.history {
            state.update(t.intensity, t.correct)?;
        }
        Ok(state)
    }
}

impl From<StaircaseState> for Snapshot {
    fn from(s: StaircaseState) -> Self {
        Snapshot {
            config: s.config,
            history: s.history,
        }
    }
}

impl StaircaseState {
    pub fn new(config: QuestConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid();
        let log_prior: Vec<f64> = grid
            .iter()
            .map(|t| -0.5 * ((t - config.prior_mean) / config.prior_sd).powi(2))
            .collect();
        let mut s = Self {
            config,
            grid,
            log_prior,
            history: Vec::new(),
            likelihoods: Vec::new(),
            posterior: Vec::new(),
        };
        s.rebuild();
        Ok(s)
    }

    pub fn config(&self) -> &QuestConfig {
        &self.config
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    pub fn history(&self) -> &[Trial] {
        &self.history
    }

    pub fn trial_count(&self) -> usize {
        self.history.len()
    }

    fn rebuild(&mut self) {
        let mut log_post = self.log_prior.clone();
        for (_, ll) in &self.likelihoods {
            for (p, l) in log_post.iter_mut().zip(ll) {
                *p += l;
            }
        }
        let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut post: Vec<f64> = log_post.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = post.iter().sum();
        post.iter_mut().for_each(|p| *p /= total);
        self.posterior = post;
    }

    /// Multiplies the posterior by the likelihood of one response.
    /// Likelihoods are floored at the smallest positive double so that a
    /// response impossible under every candidate leaves the posterior intact.
    pub fn update(&mut self, intensity: f64, correct: bool) -> Result<()> {
        if !(intensity > 0.0 && intensity <= 1.0) {
            return Err(Error::domain("staircase intensity", intensity, "(0, 1]"));
        }
        let x = intensity.log10();
        let ll: Vec<f64> = self
            .grid
            .iter()
            .map(|&t| {
                let p = self.config.p_correct(x, t);
                let p = if correct { p } else { 1.0 - p };
                p.max(f64::MIN_POSITIVE).ln()
            })
            .collect();
        let key = (intensity.to_bits(), correct);
        let pos = self.likelihoods.partition_point(|(k, _)| *k <= key);
        self.likelihoods.insert(pos, (key, ll));
        self.history.push(Trial { intensity, correct });
        self.rebuild();
        Ok(())
    }

    pub fn estimate(&self) -> Estimate {
        let mean: f64 = self.grid.iter().zip(&self.posterior).map(|(t, p)| t * p).sum();
        let var: f64 = self
            .grid
            .iter()
            .zip(&self.posterior)
            .map(|(t, p)| p * (t - mean).powi(2))
            .sum();
        Estimate {
            threshold: 10f64.powf(mean),
            mean_log10: mean,
            sd_log10: var.sqrt(),
        }
    }

    pub fn is_done(&self) -> bool {
        self.history.len() >= self.config.max_trials
            || self.config.sd_stop.is_some_and(|s| self.estimate().sd_log10 < s)
    }

    /// Next intensity: the posterior mean mapped back to linear units and
    /// clamped to what the display can show. The first trial is placed at
    /// the prior mean itself, since the grid truncates the prior
    /// asymmetrically and would otherwise bias the opening placement.
    pub fn next_intensity(&self) -> Result<f64> {
        if self.is_done() {
            return Err(Error::StaircaseFinished);
        }
        let log_x = if self.history.is_empty() {
            self.config.prior_mean
        } else {
            self.estimate().mean_log10
        };
        Ok(10f64
            .powf(log_x)
            .clamp(self.config.min_intensity, self.config.max_intensity))
    }
}

/// Observer whose responses follow the staircase's psychometric function.
#[derive(Debug, Clone)]
pub struct SimulatedObserver {
    pub true_threshold: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    rng: ChaCha8Rng,
}

impl SimulatedObserver {
    pub fn new(true_threshold: f64, config: &QuestConfig, seed: u64) -> Self {
        Self {
            true_threshold,
            beta: config.beta,
            gamma: config.gamma,
            delta: config.delta,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn p_correct(&self, intensity: f64) -> f64 {
        let cfg = QuestConfig {
            beta: self.beta,
            gamma: self.gamma,
            delta: self.delta,
            ..QuestConfig::default()
        };
        cfg.p_correct(intensity.log10(), self.true_threshold.log10())
    }

    pub fn respond(&mut self, intensity: f64) -> bool {
        let p = self.p_correct(intensity);
        self.rng.random::<f64>() < p
    }
}

/// Runs one staircase to completion against a simulated observer.
pub fn run_simulation(config: &QuestConfig, true_threshold: f64, seed: u64) -> Result<(Estimate, StaircaseState)> {
    let mut state = StaircaseState::new(*config)?;
    let mut observer = SimulatedObserver::new(true_threshold, config, seed);
    while !state.is_done() {
        let x = state.next_intensity()?;
        let correct = observer.respond(x);
        state.update(x, correct)?;
    }
    Ok((state.estimate(), state))
}
