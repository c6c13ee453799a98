//! Experiment harness: seeded environment simulators, regret bookkeeping,
//! and the configuration-driven experiment runner. Pinned to f64.

pub mod experiment;
pub mod sim;

pub use experiment::{run_experiment, Algorithm, ExperimentConfig, ImpairmentConfig, Summary};
pub use sim::{play_episode_delayed, play_episode_missing, DelayedEpisode, EnvRng, MissingEpisode};

/// Exact per-episode regret bookkeeping. Increments are differences of
/// exact policy values conditioned on the realized initial observable
/// state, so they carry no simulation noise beyond the initial draw.
#[derive(Debug, Clone, Default)]
pub struct RegretTrace {
    pub increments: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Optimistic planned value at the episode's initial observable state.
    pub optimistic: Vec<f64>,
    /// Optimal executable value at the same state (the comparator).
    pub oracle: Vec<f64>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, increment: f64, optimistic: f64, oracle: f64) {
        let total = self.cumulative.last().copied().unwrap_or(0.0) + increment;
        self.increments.push(increment);
        self.cumulative.push(total);
        self.optimistic.push(optimistic);
        self.oracle.push(oracle);
    }

    pub fn episodes(&self) -> usize {
        self.increments.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn cumulative_at(&self, k: usize) -> f64 {
        self.cumulative[k.min(self.cumulative.len()) - 1]
    }

    fn decile_mean(&self, last: bool) -> f64 {
        let n = self.increments.len();
        let d = (n / 10).max(1);
        let slice = if last { &self.increments[n - d..] } else { &self.increments[..d] };
        slice.iter().sum::<f64>() / d as f64
    }

    /// Mean per-episode regret over the first tenth of the run.
    pub fn slope_first_decile(&self) -> f64 {
        self.decile_mean(false)
    }

    /// Mean per-episode regret over the last tenth of the run.
    pub fn slope_last_decile(&self) -> f64 {
        self.decile_mean(true)
    }

    /// Fraction of episodes whose planned value was optimistic, i.e. at
    /// least the comparator value up to numerical slack.
    pub fn optimism_rate(&self) -> f64 {
        if self.optimistic.is_empty() {
            return 1.0;
        }
        let ok = self
            .optimistic
            .iter()
            .zip(&self.oracle)
            .filter(|&(&v, &star)| v >= star - 1e-9)
            .count();
        ok as f64 / self.optimistic.len() as f64
    }

    /// True when every episode's planned value was optimistic.
    pub fn always_optimistic(&self) -> bool {
        (self.optimism_rate() - 1.0).abs() < 1e-12
    }
}
