//! Learners for intermittently missing observations: confidence-set
//! planning with known observation rates, and bonus-based optimistic
//! planning on augmented counts when the rates are unknown.

use super::{optimistic_shift, optimistic_vi, AlgRun, LearnerConfig};
use crate::aug::{
    build_missing_aug, build_missing_aug_with, evaluate_aug, optimal_aug, tau_from_mask, AugMdp,
    AugState, AugValues, BuildOpts,
};
use crate::channels::MissingModel;
use crate::harness::{play_episode_missing, EnvRng, MissingEpisode, RegretTrace};
use crate::mdp::TabularMdp;
use crate::policy::{ActionChoice, ExecutablePolicy};
use crate::Result;

/// One-step counts restricted to doubly observed transitions (both
/// endpoints delivered), plus observed initial states.
#[derive(Debug, Clone)]
pub struct MissingCounts {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// visits[h][s][a], incremented only when s_h and s_{h+1} were visible
    pub visits: Vec<Vec<Vec<f64>>>,
    pub next: Vec<Vec<Vec<Vec<f64>>>>,
    pub init: Vec<f64>,
    pub episodes: usize,
}

impl MissingCounts {
    pub fn new(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        let steps = horizon - 1;
        Self {
            num_states,
            num_actions,
            horizon,
            visits: vec![vec![vec![0.0; num_actions]; num_states]; steps],
            next: vec![vec![vec![vec![0.0; num_states]; num_actions]; num_states]; steps],
            init: vec![0.0; num_states],
            episodes: 0,
        }
    }

    pub fn update(&mut self, ep: &MissingEpisode) {
        self.init[ep.states[0]] += 1.0;
        for h in 0..self.horizon - 1 {
            let from_visible = h == 0 || ep.mask[h - 1];
            if from_visible && ep.mask[h] {
                let (s, a) = (ep.states[h], ep.actions[h]);
                self.visits[h][s][a] += 1.0;
                self.next[h][s][a][ep.states[h + 1]] += 1.0;
            }
        }
        self.episodes += 1;
    }

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

    pub fn init_hat(&self) -> Vec<f64> {
        if self.episodes == 0 {
            vec![1.0 / self.num_states as f64; self.num_states]
        } else {
            self.init.iter().map(|&c| c / self.episodes as f64).collect()
        }
    }
}

/// Total-variation confidence radius for one kernel row; the empty set of
/// samples yields the whole ball (diameter 2).
pub fn confidence_set_radius(n: f64, num_states: usize, cfg: &LearnerConfig, iota: f64) -> f64 {
    if n <= 0.0 {
        2.0
    } else {
        (cfg.c * (num_states as f64 * iota / n).sqrt()).min(2.0)
    }
}

/// Structural augmented shape shared by the planners: enumerates every
/// possible observable state regardless of the current estimates.
fn structural_shape(mdp: &TabularMdp<f64>, cap: usize) -> Result<AugMdp<f64>> {
    let uniform = vec![1.0 / mdp.num_states as f64; mdp.num_states];
    build_missing_aug_with(
        mdp.num_states,
        mdp.num_actions,
        mdp.horizon,
        &mdp.initial_dist,
        &vec![0.5; mdp.horizon],
        |_, _, _| Ok(uniform.clone()),
        |_, _, _| Ok(0.0),
        BuildOpts { cap, keep_zero: true },
    )
}

/// Extended value iteration on the missing-variant augmented shape: at each
/// state-action the kernel within the chained TV budget that maximizes the
/// continuation value, and the belief within its budget that maximizes the
/// immediate reward. Returns the greedy policy and optimistic values.
///
/// With `keep_zero` layouts the first S outgoing edges are the fresh
/// arrivals in state order and the last edge is the miss branch.
pub fn evi_missing(
    shape: &AugMdp<f64>,
    kernel_hat: &[Vec<Vec<Vec<f64>>>],
    radius: &dyn Fn(usize, usize, usize) -> f64,
    lambda: &[f64],
    reward: &[Vec<Vec<f64>>],
    horizon_cap: f64,
) -> (ExecutablePolicy<f64>, AugValues<f64>) {
    let num_layers = shape.num_layers();
    let num_states = shape.num_states;
    let mut pol = ExecutablePolicy::new(num_layers, shape.num_actions);
    let mut v: Vec<Vec<f64>> = (0..num_layers).map(|h| vec![0.0; shape.layers[h].len()]).collect();
    let mut q: Vec<Vec<Vec<f64>>> = (0..num_layers)
        .map(|h| vec![vec![0.0; shape.num_actions]; shape.layers[h].len()])
        .collect();
    for h in (0..num_layers).rev() {
        for i in 0..shape.layers[h].len() {
            let AugState::Observed { last_seen, window, .. } = &shape.layers[h].states[i] else {
                unreachable!("missing variant uses observed states only");
            };
            let t = h - window.len();
            // belief under the estimated kernels, and the accumulated TV
            // budget of the chain that produced it
            let mut bel = vec![0.0; num_states];
            bel[*last_seen] = 1.0;
            let mut budget_r = 0.0;
            for (off, &aj) in window.iter().enumerate() {
                let j = t + off;
                // L1 perturbation of the belief chain: per-step radii
                // weighted by the mass that actually flows through them
                budget_r += (0..num_states).map(|s| bel[s] * radius(j, s, aj)).sum::<f64>();
                let mut nx = vec![0.0; num_states];
                for s in 0..num_states {
                    if bel[s] > 0.0 {
                        for (sp, item) in nx.iter_mut().enumerate() {
                            *item += bel[s] * kernel_hat[j][s][aj][sp];
                        }
                    }
                }
                bel = nx;
            }
            for a in 0..shape.num_actions {
                let r_col: Vec<f64> = (0..num_states).map(|s| reward[h][s][a]).collect();
                let opt_bel = optimistic_shift(&bel, &r_col, budget_r);
                let r_opt = opt_bel
                    .iter()
                    .zip(&r_col)
                    .map(|(b, r)| b * r)
                    .sum::<f64>()
                    .clamp(0.0, 1.0);
                let qa = if h == num_layers - 1 {
                    r_opt
                } else {
                    let edges = &shape.trans[h][i][a];
                    debug_assert_eq!(edges.len(), num_states + 1);
                    // push the belief one step to get the nominal arrival law
                    let mut q_arr = vec![0.0; num_states];
                    for s in 0..num_states {
                        if bel[s] > 0.0 {
                            for (sp, item) in q_arr.iter_mut().enumerate() {
                                *item += bel[s] * kernel_hat[h][s][a][sp];
                            }
                        }
                    }
                    let budget_q = budget_r
                        + (0..num_states).map(|s| bel[s] * radius(h, s, a)).sum::<f64>();
                    let util: Vec<f64> = (0..num_states).map(|sp| v[h + 1][edges[sp].0]).collect();
                    let q_opt = optimistic_shift(&q_arr, &util, budget_q);
                    let arrive: f64 = q_opt.iter().zip(&util).map(|(p, u)| p * u).sum();
                    let miss_v = v[h + 1][edges[num_states].0];
                    r_opt + lambda[h] * arrive + (1.0 - lambda[h]) * miss_v
                };
                q[h][i][a] = qa.min(horizon_cap);
            }
            let best = crate::mdp::argmax(&q[h][i]);
            v[h][i] = q[h][i][best];
            pol.set(h, shape.layers[h].states[i].clone(), ActionChoice::Action(best));
        }
    }
    let initial = shape.init.iter().map(|&(i, w)| w * v[0][i]).sum();
    (pol, AugValues { v, q, initial })
}

fn fresh_tau(s0: usize) -> AugState {
    AugState::Observed { last_seen: s0, window: vec![], staleness: 0 }
}

/// Confidence-set learner for known observation rates: per episode,
/// extended value iteration inside the current TV balls, exact regret
/// accounting, and doubly-observed count updates.
pub fn run_alg2(
    mdp: &TabularMdp<f64>,
    model: &MissingModel<f64>,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<AlgRun> {
    let truth = build_missing_aug(mdp, model, BuildOpts { cap: cfg.aug_cap, ..BuildOpts::default() })?;
    let (_, star) = optimal_aug(&truth);
    let shape = structural_shape(mdp, cfg.aug_cap)?;
    let iota = cfg.iota(mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut counts = MissingCounts::new(mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut trace = RegretTrace::new();
    let mut rng = EnvRng::new(seed);
    let mut final_policy = None;
    for _ in 0..cfg.episodes {
        let kernel = counts.kernel_hat();
        let radius = |h: usize, s: usize, a: usize| {
            confidence_set_radius(counts.visits[h][s][a], mdp.num_states, cfg, iota)
        };
        let (pol, opt_vals) = evi_missing(
            &shape,
            &kernel,
            &radius,
            &model.lambda,
            &mdp.reward,
            mdp.horizon as f64,
        );
        let played = evaluate_aug(&truth, &pol)?;
        let ep = play_episode_missing(mdp, model, &pol, &mut rng)?;
        let tau1 = fresh_tau(ep.states[0]);
        let i_truth = truth.index_of(0, &tau1)?;
        let i_est = shape.index_of(0, &tau1)?;
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

/// Counts over augmented states for the unknown-rate learner.
#[derive(Debug, Clone)]
pub struct AugCounts {
    /// n[h][i][a]: visits of (layer, template index, action)
    pub n: Vec<Vec<Vec<f64>>>,
    /// arrivals[h][i][a][s']: next states observed out of (h, i, a)
    pub arrivals: Vec<Vec<Vec<Vec<f64>>>>,
    /// missing[h]: episodes in which s_{h+1} went missing
    pub missing: Vec<f64>,
    pub episodes: usize,
}

impl AugCounts {
    fn new(shape: &AugMdp<f64>) -> Self {
        let n = (0..shape.num_layers())
            .map(|h| vec![vec![0.0; shape.num_actions]; shape.layers[h].len()])
            .collect();
        let arrivals = (0..shape.num_layers())
            .map(|h| vec![vec![vec![0.0; shape.num_states]; shape.num_actions]; shape.layers[h].len()])
            .collect();
        Self { n, arrivals, missing: vec![0.0; shape.num_layers() - 1], episodes: 0 }
    }

    fn update(&mut self, shape: &AugMdp<f64>, ep: &MissingEpisode) -> Result<()> {
        for h in 0..shape.num_layers() {
            let tau = tau_from_mask(h, &ep.states, &ep.actions, &ep.mask);
            let i = shape.index_of(h, &tau)?;
            let a = ep.actions[h];
            self.n[h][i][a] += 1.0;
            if h < shape.num_layers() - 1 {
                if ep.mask[h] {
                    self.arrivals[h][i][a][ep.states[h + 1]] += 1.0;
                } else {
                    self.missing[h] += 1.0;
                }
            }
        }
        self.episodes += 1;
        Ok(())
    }

    /// Observed per-step delivery rates; no data defaults to 1.
    fn lambda_hat(&self) -> Vec<f64> {
        let k = self.episodes as f64;
        self.missing
            .iter()
            .map(|&m| if k > 0.0 { 1.0 - m / k } else { 1.0 })
            .chain(std::iter::once(1.0)) // unused last entry
            .collect()
    }
}

/// Bonus-based learner for unknown observation rates: empirical arrival
/// kernels over augmented states, empirical delivery rates, and optimistic
/// value iteration with a count bonus plus a rate-estimation bonus.
pub fn run_alg3(
    mdp: &TabularMdp<f64>,
    model: &MissingModel<f64>,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<AlgRun> {
    let truth = build_missing_aug(mdp, model, BuildOpts { cap: cfg.aug_cap, ..BuildOpts::default() })?;
    let (_, star) = optimal_aug(&truth);
    let shape = structural_shape(mdp, cfg.aug_cap)?;
    let iota = cfg.iota(mdp.num_states, mdp.num_actions, mdp.horizon);
    let hf = mdp.horizon as f64;
    let mut aug_counts = AugCounts::new(&shape);
    let mut one_step = MissingCounts::new(mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut trace = RegretTrace::new();
    let mut rng = EnvRng::new(seed);
    let mut final_policy = None;
    for _ in 0..cfg.episodes {
        let kernel = one_step.kernel_hat();
        let init = one_step.init_hat();
        let lambda = aug_counts.lambda_hat();
        let uniform = vec![1.0 / mdp.num_states as f64; mdp.num_states];
        let arrival = |h: usize, tau: &AugState, a: usize| -> Result<Vec<f64>> {
            let i = shape.index_of(h, tau)?;
            let n: f64 = aug_counts.arrivals[h][i][a].iter().sum();
            if n > 0.0 {
                Ok(aug_counts.arrivals[h][i][a].iter().map(|&c| c / n).collect())
            } else {
                Ok(uniform.clone())
            }
        };
        let reward = |h: usize, tau: &AugState, a: usize| -> Result<f64> {
            let AugState::Observed { last_seen, window, .. } = tau else {
                unreachable!("missing variant uses observed states only");
            };
            let t = h - window.len();
            let mut bel = vec![0.0; mdp.num_states];
            bel[*last_seen] = 1.0;
            for (off, &aj) in window.iter().enumerate() {
                let mut nx = vec![0.0; mdp.num_states];
                for s in 0..mdp.num_states {
                    if bel[s] > 0.0 {
                        for (sp, item) in nx.iter_mut().enumerate() {
                            *item += bel[s] * kernel[t + off][s][aj][sp];
                        }
                    }
                }
                bel = nx;
            }
            Ok((0..mdp.num_states).map(|s| bel[s] * mdp.reward[h][s][a]).sum())
        };
        let est = build_missing_aug_with(
            mdp.num_states,
            mdp.num_actions,
            mdp.horizon,
            &init,
            &lambda,
            arrival,
            reward,
            BuildOpts { cap: cfg.aug_cap, keep_zero: true },
        )?;
        let k = aug_counts.episodes.max(1) as f64;
        let rate_term = (iota / k).sqrt().min(hf);
        let bonus: Vec<Vec<Vec<f64>>> = (0..est.num_layers())
            .map(|h| {
                (0..est.layers[h].len())
                    .map(|i| {
                        (0..est.num_actions)
                            .map(|a| {
                                let n = aug_counts.n[h][i][a];
                                let count_term =
                                    if n > 0.0 { (hf * iota / n).sqrt().min(hf) } else { hf };
                                cfg.c * hf * (count_term + rate_term)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let (pol, opt_vals) = optimistic_vi(&est, &bonus, hf);
        let played = evaluate_aug(&truth, &pol)?;
        let ep = play_episode_missing(mdp, model, &pol, &mut rng)?;
        let tau1 = fresh_tau(ep.states[0]);
        let i_truth = truth.index_of(0, &tau1)?;
        let i_est = est.index_of(0, &tau1)?;
        trace.push(
            star.v[0][i_truth] - played.v[0][i_truth],
            opt_vals.v[0][i_est],
            star.v[0][i_truth],
        );
        aug_counts.update(&shape, &ep)?;
        one_step.update(&ep);
        final_policy = Some(pol);
    }
    Ok(AlgRun { trace, final_policy: final_policy.expect("at least one episode") })
}
