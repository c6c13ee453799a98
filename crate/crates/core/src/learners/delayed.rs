//! Optimistic learner for delayed observations: empirical kernels and
//! inter-arrival hazards, count-based bonuses, and optimistic value
//! iteration on the past-reward augmented MDP built from the estimates.

use super::{optimistic_vi, AlgRun, LearnerConfig};
use crate::aug::{
    build_delayed_aug, build_delayed_aug_past_from, evaluate_aug, optimal_aug,
    AugMdp, AugState, BuildOpts, DelayedDynamics, HazardTable,
};
use crate::channels::DelayModel;
use crate::harness::{play_episode_delayed, DelayedEpisode, EnvRng, RegretTrace};
use crate::mdp::TabularMdp;
use crate::Result;

/// Empirical counts for the delayed setting, filled from the end-of-episode
/// flush (full trajectory plus arrival timestamps).
#[derive(Debug, Clone)]
pub struct DelayedCounts {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// visits[t][s][a] = number of observed transitions out of (t, s, a)
    pub visits: Vec<Vec<Vec<f64>>>,
    /// next[t][s][a][s']
    pub next: Vec<Vec<Vec<Vec<f64>>>>,
    /// gaps[t][s][a][delta] = inter-arrival counts, delta = 0..=H
    pub gaps: Vec<Vec<Vec<Vec<f64>>>>,
    /// observed initial states
    pub init: Vec<f64>,
    pub episodes: usize,
}

impl DelayedCounts {
    pub fn new(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        let steps = horizon - 1;
        Self {
            num_states,
            num_actions,
            horizon,
            visits: vec![vec![vec![0.0; num_actions]; num_states]; steps],
            next: vec![vec![vec![vec![0.0; num_states]; num_actions]; num_states]; steps],
            gaps: vec![vec![vec![vec![0.0; horizon + 1]; num_actions]; num_states]; steps],
            init: vec![0.0; num_states],
            episodes: 0,
        }
    }

    pub fn update(&mut self, ep: &DelayedEpisode) {
        self.init[ep.states[0]] += 1.0;
        for t in 0..self.horizon - 1 {
            let (s, a) = (ep.states[t], ep.actions[t]);
            self.visits[t][s][a] += 1.0;
            self.next[t][s][a][ep.states[t + 1]] += 1.0;
            self.gaps[t][s][a][ep.schedule.delta[t].min(self.horizon)] += 1.0;
        }
        self.episodes += 1;
    }

    /// Empirical kernels; unvisited rows fall back to uniform.
    pub fn kernel_hat(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        let uniform = 1.0 / self.num_states as f64;
        self.next
            .iter()
            .zip(&self.visits)
            .map(|(per_s, v_s)| {
                per_s
                    .iter()
                    .zip(v_s)
                    .map(|(per_a, v_a)| {
                        per_a
                            .iter()
                            .zip(v_a)
                            .map(|(row, &n)| {
                                if n > 0.0 {
                                    row.iter().map(|&c| c / n).collect()
                                } else {
                                    vec![uniform; self.num_states]
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Empirical hazard rates: arrivals at staleness delta over samples that
    /// survived to delta. Unsupported staleness falls back to forced arrival.
    pub fn hazard_hat(&self) -> HazardTable<f64> {
        let delta_max = self.horizon;
        let mut theta = vec![
            vec![vec![vec![1.0; delta_max]; self.num_actions]; self.num_states];
            self.horizon - 1
        ];
        for t in 0..self.horizon - 1 {
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    for delta in 0..delta_max {
                        let tail: f64 = self.gaps[t][s][a][delta..].iter().sum();
                        theta[t][s][a][delta] =
                            if tail > 0.0 { self.gaps[t][s][a][delta] / tail } else { 1.0 };
                    }
                }
            }
        }
        HazardTable::from_estimates(theta, delta_max)
    }

    pub fn init_hat(&self) -> Vec<f64> {
        if self.episodes == 0 {
            vec![1.0 / self.num_states as f64; self.num_states]
        } else {
            self.init.iter().map(|&c| c / self.episodes as f64).collect()
        }
    }
}

/// Count-based exploration bonus for one augmented state-action: the hazard
/// term uses the inter-arrival count at the state's staleness, the kernel
/// term the transition count, each capped at H when unvisited.
pub fn bonus_delayed(
    counts: &DelayedCounts,
    cfg: &LearnerConfig,
    h: usize,
    tau: &AugState,
    a: usize,
) -> f64 {
    let hf = counts.horizon as f64;
    let iota = cfg.iota(counts.num_states, counts.num_actions, counts.horizon);
    let term = |n: f64| if n > 0.0 { (hf * iota / n).sqrt().min(hf) } else { hf };
    match tau {
        AugState::Drained => 0.0,
        AugState::Unobserved { .. } => cfg.c * hf * 2.0 * term(counts.episodes as f64),
        AugState::Observed { last_seen, window, staleness } => {
            let t = h.min(counts.horizon) - window.len();
            if t + 1 >= counts.horizon {
                // last observation already delivered; nothing left to learn
                return 0.0;
            }
            let a_t = if window.is_empty() { a } else { window[0] };
            let mut b = term(counts.visits[t][*last_seen][a_t]);
            if h + 1 < counts.horizon {
                // a stochastic-arrival layer: hazard uncertainty contributes
                b += term(counts.gaps[t][*last_seen][a_t][(*staleness).min(counts.horizon)]);
            }
            cfg.c * hf * b
        }
    }
}

fn bonus_table(counts: &DelayedCounts, cfg: &LearnerConfig, aug: &AugMdp<f64>) -> Vec<Vec<Vec<f64>>> {
    (0..aug.num_layers())
        .map(|h| {
            aug.layers[h]
                .states
                .iter()
                .map(|tau| {
                    (0..aug.num_actions).map(|a| bonus_delayed(counts, cfg, h, tau, a)).collect()
                })
                .collect()
        })
        .collect()
}

/// The initial observable state of a delayed episode.
fn initial_tau(model: &DelayModel<f64>, s0: usize) -> AugState {
    if model.initial_delay == 0 {
        AugState::Observed { last_seen: s0, window: vec![], staleness: 0 }
    } else {
        AugState::Unobserved { window: vec![] }
    }
}

/// Algorithm for the delayed setting: per episode, re-estimate the model,
/// plan optimistically on the estimated past-reward augmented MDP, play one
/// episode, and record the exact per-episode regret against the truth.
pub fn run_alg1(
    mdp: &TabularMdp<f64>,
    model: &DelayModel<f64>,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<AlgRun> {
    let truth = build_delayed_aug(mdp, model, BuildOpts { cap: cfg.aug_cap, ..BuildOpts::default() })?;
    let (_, star) = optimal_aug(&truth);
    let mut trace = RegretTrace::new();
    let mut counts = DelayedCounts::new(mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut rng = EnvRng::new(seed);
    let mut final_policy = None;
    for _ in 0..cfg.episodes {
        let kernel = counts.kernel_hat();
        let hazard = counts.hazard_hat();
        let init = counts.init_hat();
        let dynamics = DelayedDynamics {
            num_states: mdp.num_states,
            num_actions: mdp.num_actions,
            horizon: mdp.horizon,
            kernel: &kernel,
            initial_dist: &init,
            hazard: &hazard,
            initial_delay: model.initial_delay,
        };
        let est = build_delayed_aug_past_from(
            &dynamics,
            &mdp.reward,
            BuildOpts { cap: cfg.aug_cap, keep_zero: true },
        )?;
        let bonus = bonus_table(&counts, cfg, &est);
        let (pol, opt_vals) = optimistic_vi(&est, &bonus, mdp.horizon as f64);
        let played = evaluate_aug(&truth, &pol)?;
        let ep = play_episode_delayed(mdp, model, &pol, &mut rng)?;

        let tau1 = initial_tau(model, ep.states[0]);
        let i_truth = truth.index_of(0, &tau1)?;
        let i_est = est.index_of(0, &tau1)?;
        trace.push(
            star.v[0][i_truth] - played.v[0][i_truth],
            opt_vals.v[0][i_est],
            star.v[0][i_truth],
        );
        counts.update(&ep);
        final_policy = Some(pol);
    }
    Ok(AlgRun { trace, final_policy: final_policy.expect("at least one episode") })
}
