//! Builders for the augmented MDPs: layer-by-layer forward enumeration of
//! reachable observable-history states with sparse transitions.

use super::{AugLayer, AugMdp, AugState, HazardTable, Variant};
use crate::channels::{DelayModel, MissingModel};
use crate::mdp::{check_prob_vector, multi_step_kernel, prob_tol, TabularMdp};
use crate::{Error, Result, Scalar};

/// Options shared by all builders.
#[derive(Debug, Clone, Copy)]
pub struct BuildOpts {
    /// Hard cap on total augmented state-actions.
    pub cap: usize,
    /// Keep structurally possible zero-probability edges. Builders fed with
    /// estimated dynamics must set this so the resulting policies cover
    /// every state the true environment can reach.
    pub keep_zero: bool,
}

impl Default for BuildOpts {
    fn default() -> Self {
        Self { cap: 2_000_000, keep_zero: false }
    }
}

impl BuildOpts {
    pub fn structural() -> Self {
        Self { keep_zero: true, ..Self::default() }
    }
}

/// One-step dynamics plus hazard model for the delayed builders. Works both
/// for the true environment and for empirical estimates of it.
#[derive(Debug, Clone)]
pub struct DelayedDynamics<'a, F> {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// kernel[h][s][a][s'] for h = 0..H-2
    pub kernel: &'a [Vec<Vec<Vec<F>>>],
    pub initial_dist: &'a [F],
    pub hazard: &'a HazardTable<F>,
    /// Arrival time of the first observation.
    pub initial_delay: usize,
}

impl<'a, F: Scalar> DelayedDynamics<'a, F> {
    pub fn from_truth(mdp: &'a TabularMdp<F>, hazard: &'a HazardTable<F>, initial_delay: usize) -> Self {
        Self {
            num_states: mdp.num_states,
            num_actions: mdp.num_actions,
            horizon: mdp.horizon,
            kernel: &mdp.kernel,
            initial_dist: &mdp.initial_dist,
            hazard,
            initial_delay,
        }
    }

    /// Belief over the latent state at step `h` given the observable state.
    fn belief(&self, h: usize, tau: &AugState) -> Result<Vec<F>> {
        let (mut dist, window, start) = match tau {
            AugState::Observed { last_seen, window, .. } => {
                let t = h.checked_sub(window.len()).ok_or_else(|| {
                    Error::Dimension(format!("window of length {} at step {h}", window.len()))
                })?;
                let mut d = vec![F::zero(); self.num_states];
                d[*last_seen] = F::one();
                (d, window.clone(), t)
            }
            AugState::Unobserved { window } => {
                if window.len() != h {
                    return Err(Error::Dimension(format!(
                        "unobserved window of length {} at step {h}",
                        window.len()
                    )));
                }
                (self.initial_dist.to_vec(), window.clone(), 0)
            }
            AugState::Drained => {
                return Err(Error::InvalidModel("belief undefined for drained state".into()))
            }
        };
        for (off, &a) in window.iter().enumerate() {
            let t = start + off;
            let mut next = vec![F::zero(); self.num_states];
            for s in 0..self.num_states {
                if dist[s] > F::zero() {
                    for (sp, item) in next.iter_mut().enumerate() {
                        *item = *item + dist[s] * self.kernel[t][s][a][sp];
                    }
                }
            }
            dist = next;
        }
        Ok(dist)
    }
}

/// Delayed-observation augmented MDP paying the belief-averaged reward;
/// horizon H.
pub fn build_delayed_aug<F: Scalar>(
    mdp: &TabularMdp<F>,
    model: &DelayModel<F>,
    opts: BuildOpts,
) -> Result<AugMdp<F>> {
    let hazard = HazardTable::from_model(model)?;
    let dynamics = DelayedDynamics::from_truth(mdp, &hazard, model.initial_delay);
    build_delayed_aug_from(&dynamics, &mdp.reward, opts)
}

pub fn build_delayed_aug_from<F: Scalar>(
    dynamics: &DelayedDynamics<F>,
    reward: &[Vec<Vec<F>>],
    opts: BuildOpts,
) -> Result<AugMdp<F>> {
    build_delayed_core(dynamics, reward, false, opts)
}

/// Delayed-observation augmented MDP paying the true reward on arrival;
/// horizon 2H, with deterministic drain of the outstanding observations
/// after the real episode ends.
pub fn build_delayed_aug_past<F: Scalar>(
    mdp: &TabularMdp<F>,
    model: &DelayModel<F>,
    opts: BuildOpts,
) -> Result<AugMdp<F>> {
    let hazard = HazardTable::from_model(model)?;
    let dynamics = DelayedDynamics::from_truth(mdp, &hazard, model.initial_delay);
    build_delayed_aug_past_from(&dynamics, &mdp.reward, opts)
}

pub fn build_delayed_aug_past_from<F: Scalar>(
    dynamics: &DelayedDynamics<F>,
    reward: &[Vec<Vec<F>>],
    opts: BuildOpts,
) -> Result<AugMdp<F>> {
    build_delayed_core(dynamics, reward, true, opts)
}

fn build_delayed_core<F: Scalar>(
    d: &DelayedDynamics<F>,
    reward: &[Vec<Vec<F>>],
    past: bool,
    opts: BuildOpts,
) -> Result<AugMdp<F>> {
    let horizon = d.horizon;
    let num_layers = if past { 2 * horizon } else { horizon };
    let (num_states, num_actions) = (d.num_states, d.num_actions);
    if d.initial_delay >= horizon {
        return Err(Error::InvalidModel(format!(
            "initial delay {} must be below the horizon {horizon}",
            d.initial_delay
        )));
    }

    let mut layers: Vec<AugLayer> = (0..num_layers).map(|_| AugLayer::default()).collect();
    let mut init: Vec<(usize, F)> = Vec::new();
    if d.initial_delay == 0 {
        for s in 0..num_states {
            if d.initial_dist[s] > F::zero() || opts.keep_zero {
                let i = layers[0].intern(AugState::Observed { last_seen: s, window: vec![], staleness: 0 });
                init.push((i, d.initial_dist[s]));
            }
        }
    } else {
        let i = layers[0].intern(AugState::Unobserved { window: vec![] });
        init.push((i, F::one()));
    }

    let mut trans: Vec<Vec<Vec<Vec<(usize, F)>>>> = Vec::with_capacity(num_layers);
    let mut sa_total = 0usize;
    for h in 0..num_layers {
        sa_total += layers[h].len() * num_actions;
        if sa_total > opts.cap {
            return Err(Error::CapExceeded { layer: h, size: sa_total, cap: opts.cap });
        }
        if h == num_layers - 1 {
            trans.push(vec![vec![Vec::new(); num_actions]; layers[h].len()]);
            break;
        }
        let wait = past && h >= horizon - 1;
        let mut layer_trans: Vec<Vec<Vec<(usize, F)>>> = Vec::with_capacity(layers[h].len());
        let (cur, rest) = layers.split_at_mut(h + 1);
        let cur = &cur[h];
        let next = &mut rest[0];
        for state in cur.states.clone() {
            let mut per_action: Vec<Vec<(usize, F)>> = Vec::with_capacity(num_actions);
            for a in 0..num_actions {
                let mut edges: Vec<(usize, F)> = Vec::new();
                match &state {
                    AugState::Drained => {
                        let j = next.intern(AugState::Drained);
                        edges.push((j, F::one()));
                    }
                    AugState::Unobserved { window } => {
                        let full: Vec<usize> = if h < horizon {
                            let mut w = window.clone();
                            w.push(a);
                            w
                        } else {
                            window.clone()
                        };
                        if h + 1 == d.initial_delay {
                            // first observation (of s_0) lands now
                            for s0 in 0..num_states {
                                let p = d.initial_dist[s0];
                                if p > F::zero() || opts.keep_zero {
                                    let j = next.intern(AugState::Observed {
                                        last_seen: s0,
                                        window: full.clone(),
                                        staleness: 0,
                                    });
                                    edges.push((j, p));
                                }
                            }
                        } else {
                            let j = next.intern(AugState::Unobserved { window: full });
                            edges.push((j, F::one()));
                        }
                    }
                    AugState::Observed { last_seen, window, staleness } => {
                        let s_t = *last_seen;
                        let t = h.min(horizon) - window.len();
                        let full: Vec<usize> = if h < horizon {
                            let mut w = window.clone();
                            w.push(a);
                            w
                        } else {
                            window.clone()
                        };
                        let a_t = full[0];
                        if wait {
                            // outstanding observations now arrive one per step
                            if t + 1 > horizon - 1 {
                                let j = next.intern(AugState::Drained);
                                edges.push((j, F::one()));
                            } else {
                                for sp in 0..num_states {
                                    let p = d.kernel[t][s_t][a_t][sp];
                                    if p > F::zero() || opts.keep_zero {
                                        let j = next.intern(AugState::Observed {
                                            last_seen: sp,
                                            window: full[1..].to_vec(),
                                            staleness: 0,
                                        });
                                        edges.push((j, p));
                                    }
                                }
                            }
                        } else {
                            let th = d.hazard.at(t, s_t, a_t, *staleness);
                            for sp in 0..num_states {
                                let p = th * d.kernel[t][s_t][a_t][sp];
                                if p > F::zero() || opts.keep_zero {
                                    let j = next.intern(AugState::Observed {
                                        last_seen: sp,
                                        window: full[1..].to_vec(),
                                        staleness: 0,
                                    });
                                    edges.push((j, p));
                                }
                            }
                            let miss = F::one() - th;
                            if *staleness + 1 <= d.hazard.delta_max
                                && (miss > F::zero() || opts.keep_zero)
                            {
                                let j = next.intern(AugState::Observed {
                                    last_seen: s_t,
                                    window: full,
                                    staleness: staleness + 1,
                                });
                                edges.push((j, miss.max(F::zero())));
                            }
                        }
                    }
                }
                let dist: Vec<F> = edges.iter().map(|&(_, p)| p).collect();
                check_prob_vector(&dist, &format!("augmented transition at layer {h}"))?;
                per_action.push(edges);
            }
            layer_trans.push(per_action);
        }
        trans.push(layer_trans);
    }

    // rewards
    let mut rew: Vec<Vec<Vec<F>>> = Vec::with_capacity(num_layers);
    for (h, layer) in layers.iter().enumerate() {
        let mut layer_rew = Vec::with_capacity(layer.len());
        for state in &layer.states {
            let mut row = vec![F::zero(); num_actions];
            if past {
                if let AugState::Observed { last_seen, window, staleness } = state {
                    if *staleness == 0 {
                        let t = h.min(d.horizon) - window.len();
                        if t <= d.horizon - 1 {
                            for (a, item) in row.iter_mut().enumerate() {
                                let a_t = if window.is_empty() { a } else { window[0] };
                                *item = reward[t][*last_seen][a_t];
                            }
                        }
                    }
                }
            } else if !matches!(state, AugState::Drained) {
                let b = d.belief(h, state)?;
                for (a, item) in row.iter_mut().enumerate() {
                    *item = (0..num_states).fold(F::zero(), |acc, s| acc + b[s] * reward[h][s][a]);
                }
            }
            layer_rew.push(row);
        }
        rew.push(layer_rew);
    }

    let aug = AugMdp {
        variant: if past { Variant::DelayedPast } else { Variant::DelayedExpected },
        num_states,
        num_actions,
        real_horizon: horizon,
        layers,
        reward: rew,
        trans,
        init,
    };
    debug_validate(&aug);
    Ok(aug)
}

/// Missing-observation augmented MDP from the true environment; horizon H.
pub fn build_missing_aug<F: Scalar>(
    mdp: &TabularMdp<F>,
    model: &MissingModel<F>,
    opts: BuildOpts,
) -> Result<AugMdp<F>> {
    let arrival = |h: usize, tau: &AugState, a: usize| -> Result<Vec<F>> {
        let AugState::Observed { last_seen, window, .. } = tau else {
            return Err(Error::InvalidModel("missing variant uses observed states only".into()));
        };
        let t = h - window.len();
        let mut full = window.clone();
        full.push(a);
        multi_step_kernel(mdp, t, *last_seen, &full)
    };
    let rew = |h: usize, tau: &AugState, a: usize| -> Result<F> {
        let b = super::belief(mdp, h, tau)?;
        Ok((0..mdp.num_states).fold(F::zero(), |acc, s| acc + b[s] * mdp.reward[h][s][a]))
    };
    build_missing_aug_with(
        mdp.num_states,
        mdp.num_actions,
        mdp.horizon,
        &mdp.initial_dist,
        &model.lambda,
        arrival,
        rew,
        opts,
    )
}

/// Missing-observation augmented MDP from arbitrary arrival-distribution and
/// reward providers (used for both the truth and empirical estimates).
#[allow(clippy::too_many_arguments)]
pub fn build_missing_aug_with<F: Scalar>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    initial_dist: &[F],
    lambda: &[F],
    arrival: impl Fn(usize, &AugState, usize) -> Result<Vec<F>>,
    reward: impl Fn(usize, &AugState, usize) -> Result<F>,
    opts: BuildOpts,
) -> Result<AugMdp<F>> {
    if lambda.len() != horizon {
        return Err(Error::Dimension(format!(
            "lambda has {} entries, expected {horizon}",
            lambda.len()
        )));
    }
    let mut layers: Vec<AugLayer> = (0..horizon).map(|_| AugLayer::default()).collect();
    let mut init: Vec<(usize, F)> = Vec::new();
    for s in 0..num_states {
        if initial_dist[s] > F::zero() || opts.keep_zero {
            let i = layers[0].intern(AugState::Observed { last_seen: s, window: vec![], staleness: 0 });
            init.push((i, initial_dist[s]));
        }
    }

    let mut trans: Vec<Vec<Vec<Vec<(usize, F)>>>> = Vec::with_capacity(horizon);
    let mut rew: Vec<Vec<Vec<F>>> = Vec::with_capacity(horizon);
    let mut sa_total = 0usize;
    for h in 0..horizon {
        sa_total += layers[h].len() * num_actions;
        if sa_total > opts.cap {
            return Err(Error::CapExceeded { layer: h, size: sa_total, cap: opts.cap });
        }
        let mut layer_rew = Vec::with_capacity(layers[h].len());
        for state in layers[h].states.clone() {
            let mut row = vec![F::zero(); num_actions];
            for (a, item) in row.iter_mut().enumerate() {
                *item = reward(h, &state, a)?;
            }
            layer_rew.push(row);
        }
        rew.push(layer_rew);
        if h == horizon - 1 {
            trans.push(vec![vec![Vec::new(); num_actions]; layers[h].len()]);
            break;
        }
        let mut layer_trans: Vec<Vec<Vec<(usize, F)>>> = Vec::with_capacity(layers[h].len());
        let (cur, rest) = layers.split_at_mut(h + 1);
        let cur = &cur[h];
        let next = &mut rest[0];
        for state in cur.states.clone() {
            let AugState::Observed { last_seen, window, staleness } = state.clone() else {
                return Err(Error::InvalidModel("missing variant uses observed states only".into()));
            };
            let mut per_action: Vec<Vec<(usize, F)>> = Vec::with_capacity(num_actions);
            for a in 0..num_actions {
                let mut edges: Vec<(usize, F)> = Vec::new();
                let lam = lambda[h];
                let q = arrival(h, &state, a)?;
                check_prob_vector(&q, &format!("arrival distribution at layer {h}"))?;
                for sp in 0..num_states {
                    let p = lam * q[sp];
                    if p > F::zero() || opts.keep_zero {
                        let j = next.intern(AugState::Observed { last_seen: sp, window: vec![], staleness: 0 });
                        edges.push((j, p));
                    }
                }
                let miss = F::one() - lam;
                if miss > F::zero() || opts.keep_zero {
                    let mut full = window.clone();
                    full.push(a);
                    let j = next.intern(AugState::Observed {
                        last_seen,
                        window: full,
                        staleness: staleness + 1,
                    });
                    edges.push((j, miss.max(F::zero())));
                }
                let dist: Vec<F> = edges.iter().map(|&(_, p)| p).collect();
                check_prob_vector(&dist, &format!("augmented transition at layer {h}"))?;
                per_action.push(edges);
            }
            layer_trans.push(per_action);
        }
        trans.push(layer_trans);
    }

    let aug = AugMdp {
        variant: Variant::Missing,
        num_states,
        num_actions,
        real_horizon: horizon,
        layers,
        reward: rew,
        trans,
        init,
    };
    debug_validate(&aug);
    Ok(aug)
}

fn debug_validate<F: Scalar>(aug: &AugMdp<F>) {
    if cfg!(debug_assertions) {
        let tol = prob_tol::<F>();
        for h in 0..aug.num_layers() - 1 {
            for i in 0..aug.layers[h].len() {
                for a in 0..aug.num_actions {
                    let sum = aug.trans[h][i][a].iter().fold(F::zero(), |acc, &(_, p)| acc + p);
                    debug_assert!(
                        (sum - F::one()).abs() < tol * F::from(100.0).unwrap(),
                        "transition mass {sum} at layer {h}"
                    );
                }
            }
        }
    }
}
