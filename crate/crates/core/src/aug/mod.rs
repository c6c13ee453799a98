//! Augmented MDP constructions for delayed and missing observations.
//!
//! The observable history of the agent at step h compresses to a state
//! `(last seen state, actions taken since, staleness)`. This module builds
//! the exact tabular MDP over those states for three dynamics variants and
//! provides exact evaluation / planning on the result.

mod build;

pub use build::{
    build_delayed_aug, build_delayed_aug_from, build_delayed_aug_past, build_delayed_aug_past_from,
    build_missing_aug, build_missing_aug_with, BuildOpts, DelayedDynamics,
};

use std::collections::HashMap;
use std::fmt;

use crate::channels::DelayModel;
use crate::mdp::{multi_step_kernel, TabularMdp};
use crate::policy::ExecutablePolicy;
use crate::{Error, Result, Scalar};

/// Observable history state of the agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AugState {
    /// Nothing observed yet; `window` holds every action taken so far.
    Unobserved { window: Vec<usize> },
    /// Most recent observation, the actions taken since it was generated,
    /// and how many steps ago it arrived.
    Observed {
        last_seen: usize,
        window: Vec<usize>,
        staleness: usize,
    },
    /// Past-reward variant only: every in-horizon observation has arrived.
    Drained,
}

impl fmt::Display for AugState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugState::Unobserved { window } => write!(f, "unseen|w={window:?}"),
            AugState::Observed { last_seen, window, staleness } => {
                write!(f, "s={last_seen}|w={window:?}|d={staleness}")
            }
            AugState::Drained => write!(f, "drained"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Horizon-H construction paying the belief-averaged reward each step.
    DelayedExpected,
    /// Horizon-2H construction paying the true reward when it arrives.
    DelayedPast,
    /// Horizon-H construction for intermittently missing observations.
    Missing,
}

/// One layer of interned augmented states with stable indices.
#[derive(Debug, Clone, Default)]
pub struct AugLayer {
    pub states: Vec<AugState>,
    index: HashMap<AugState, usize>,
}

impl AugLayer {
    pub fn intern(&mut self, state: AugState) -> usize {
        if let Some(&i) = self.index.get(&state) {
            return i;
        }
        let i = self.states.len();
        self.index.insert(state.clone(), i);
        self.states.push(state);
        i
    }

    pub fn index_of(&self, state: &AugState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Exact tabular MDP over augmented states. Transitions are sparse lists of
/// `(next index, probability)` into the following layer; the last layer has
/// no outgoing transitions.
#[derive(Debug, Clone)]
pub struct AugMdp<F> {
    pub variant: Variant,
    pub num_states: usize,
    pub num_actions: usize,
    /// Horizon H of the underlying MDP (layer count is H or 2H).
    pub real_horizon: usize,
    pub layers: Vec<AugLayer>,
    /// reward[h][i][a]
    pub reward: Vec<Vec<Vec<F>>>,
    /// trans[h][i][a] -> sparse next distribution (empty in the last layer)
    pub trans: Vec<Vec<Vec<Vec<(usize, F)>>>>,
    /// Initial distribution over layer-0 indices.
    pub init: Vec<(usize, F)>,
}

impl<F: Scalar> AugMdp<F> {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn total_state_actions(&self) -> usize {
        self.layers.iter().map(|l| l.len() * self.num_actions).sum()
    }

    /// Index of `state` in layer `h`, or an error naming the gap.
    pub fn index_of(&self, h: usize, state: &AugState) -> Result<usize> {
        self.layers[h].index_of(state).ok_or_else(|| Error::PolicyGap {
            layer: h,
            state: format!("{state:?}"),
        })
    }
}

/// Hazard table θ(t, s, a, δ): probability the next observation arrives now
/// given it has not arrived for δ steps. Entries flagged unreachable force
/// arrival (θ = 1), which also covers the δ = δ_max cap.
#[derive(Debug, Clone)]
pub struct HazardTable<F> {
    /// theta[t][s][a][δ] for δ = 0..δ_max-1 (δ_max forces arrival).
    pub theta: Vec<Vec<Vec<Vec<F>>>>,
    pub delta_max: usize,
}

impl<F: Scalar> HazardTable<F> {
    pub fn from_model(model: &DelayModel<F>) -> Result<Self> {
        let mut theta = Vec::with_capacity(model.pmf.len());
        for t in 0..model.pmf.len() {
            let mut per_s = Vec::new();
            for s in 0..model.pmf[t].len() {
                let mut per_a = Vec::new();
                for a in 0..model.pmf[t][s].len() {
                    let mut row = Vec::with_capacity(model.delta_max);
                    for delta in 0..model.delta_max {
                        row.push(match theta_delay(model, t, s, a, delta) {
                            Ok(v) => v,
                            // past the reachable support: force arrival
                            Err(Error::UnreachableStaleness { .. }) => F::one(),
                            Err(e) => return Err(e),
                        });
                    }
                    per_a.push(row);
                }
                per_s.push(per_a);
            }
            theta.push(per_s);
        }
        Ok(Self { theta, delta_max: model.delta_max })
    }

    /// Table built from externally estimated hazards (e.g. empirical ones).
    pub fn from_estimates(theta: Vec<Vec<Vec<Vec<F>>>>, delta_max: usize) -> Self {
        Self { theta, delta_max }
    }

    pub fn at(&self, t: usize, s: usize, a: usize, delta: usize) -> F {
        if delta >= self.delta_max {
            return F::one();
        }
        let row = &self.theta[t.min(self.theta.len() - 1)][s][a];
        if delta >= row.len() {
            F::one()
        } else {
            row[delta].min(F::one()).max(F::zero())
        }
    }
}

/// Hazard rate of the inter-arrival distribution:
/// P(Δ = δ) / P(Δ ≥ δ). Errors when the conditioning event has zero mass.
pub fn theta_delay<F: Scalar>(
    model: &DelayModel<F>,
    t: usize,
    s: usize,
    a: usize,
    delta: usize,
) -> Result<F> {
    if delta > model.delta_max {
        return Err(Error::UnreachableStaleness { h: t, s, a, delta });
    }
    let pmf = &model.pmf[t.min(model.pmf.len() - 1)][s][a];
    let tail: F = pmf[delta..].iter().fold(F::zero(), |acc, &x| acc + x);
    let floor = F::from(1e-15).unwrap();
    if tail <= floor {
        return Err(Error::UnreachableStaleness { h: t, s, a, delta });
    }
    Ok((pmf[delta] / tail).min(F::one()))
}

/// Belief over the latent state at step h given the observable state: the
/// last observation pushed through the action window. `Unobserved` states
/// push the initial distribution instead.
pub fn belief<F: Scalar>(mdp: &TabularMdp<F>, h: usize, tau: &AugState) -> Result<Vec<F>> {
    match tau {
        AugState::Observed { last_seen, window, .. } => {
            let t = h.checked_sub(window.len()).ok_or_else(|| {
                Error::Dimension(format!("window of length {} at step {h}", window.len()))
            })?;
            multi_step_kernel(mdp, t, *last_seen, window)
        }
        AugState::Unobserved { window } => {
            if window.len() != h {
                return Err(Error::Dimension(format!(
                    "unobserved window of length {} at step {h}",
                    window.len()
                )));
            }
            let mut dist = mdp.initial_dist.clone();
            for (t, &a) in window.iter().enumerate() {
                let mut next = vec![F::zero(); mdp.num_states];
                for s in 0..mdp.num_states {
                    if dist[s] > F::zero() {
                        for (sp, item) in next.iter_mut().enumerate() {
                            *item = *item + dist[s] * mdp.kernel[t][s][a][sp];
                        }
                    }
                }
                dist = next;
            }
            Ok(dist)
        }
        AugState::Drained => Err(Error::InvalidModel("belief undefined for drained state".into())),
    }
}

/// Observable state implied by a latent prefix and an arrival schedule.
/// Only arrivals at or before step `h` are consulted, so a schedule prefix
/// covering observations `0..h` suffices.
pub fn tau_from_schedule(
    h: usize,
    states: &[usize],
    actions: &[usize],
    sched: &crate::channels::ArrivalSchedule,
) -> AugState {
    match sched.nearest_visible(h) {
        None => AugState::Unobserved { window: actions[..h].to_vec() },
        Some(t) => AugState::Observed {
            last_seen: states[t],
            window: actions[t..h].to_vec(),
            staleness: h - (t + sched.d[t]),
        },
    }
}

/// Observable state implied by a latent prefix and a survival mask
/// (`mask[u]` is the visibility of `s_{u+1}`; `s_0` is always visible).
pub fn tau_from_mask(h: usize, states: &[usize], actions: &[usize], mask: &[bool]) -> AugState {
    let mut t = 0;
    for u in 1..=h {
        if mask[u - 1] {
            t = u;
        }
    }
    AugState::Observed {
        last_seen: states[t],
        window: actions[t..h].to_vec(),
        staleness: h - t,
    }
}

/// Exact state and state-action values of a policy on an augmented MDP.
#[derive(Debug, Clone)]
pub struct AugValues<F> {
    pub v: Vec<Vec<F>>,
    pub q: Vec<Vec<Vec<F>>>,
    /// Value averaged over the initial distribution.
    pub initial: F,
}

pub fn evaluate_aug<F: Scalar>(aug: &AugMdp<F>, pol: &ExecutablePolicy<F>) -> Result<AugValues<F>> {
    let num_layers = aug.num_layers();
    let mut v: Vec<Vec<F>> = (0..num_layers).map(|h| vec![F::zero(); aug.layers[h].len()]).collect();
    let mut q: Vec<Vec<Vec<F>>> = (0..num_layers)
        .map(|h| vec![vec![F::zero(); aug.num_actions]; aug.layers[h].len()])
        .collect();
    for h in (0..num_layers).rev() {
        for i in 0..aug.layers[h].len() {
            let choice = pol.choice(h, &aug.layers[h].states[i])?;
            let mut vs = F::zero();
            for a in 0..aug.num_actions {
                let mut qa = aug.reward[h][i][a];
                for &(j, p) in &aug.trans[h][i][a] {
                    qa = qa + p * v[h + 1][j];
                }
                q[h][i][a] = qa;
                vs = vs + choice.prob(a) * qa;
            }
            v[h][i] = vs;
        }
    }
    let initial = aug.init.iter().fold(F::zero(), |acc, &(i, w)| acc + w * v[0][i]);
    Ok(AugValues { v, q, initial })
}

/// Optimal executable policy and values by backward induction; greedy ties
/// break toward the lowest action index.
pub fn optimal_aug<F: Scalar>(aug: &AugMdp<F>) -> (ExecutablePolicy<F>, AugValues<F>) {
    let num_layers = aug.num_layers();
    let mut pol = ExecutablePolicy::new(num_layers, aug.num_actions);
    let mut v: Vec<Vec<F>> = (0..num_layers).map(|h| vec![F::zero(); aug.layers[h].len()]).collect();
    let mut q: Vec<Vec<Vec<F>>> = (0..num_layers)
        .map(|h| vec![vec![F::zero(); aug.num_actions]; aug.layers[h].len()])
        .collect();
    for h in (0..num_layers).rev() {
        for i in 0..aug.layers[h].len() {
            for a in 0..aug.num_actions {
                let mut qa = aug.reward[h][i][a];
                for &(j, p) in &aug.trans[h][i][a] {
                    qa = qa + p * v[h + 1][j];
                }
                q[h][i][a] = qa;
            }
            let best = crate::mdp::argmax(&q[h][i]);
            v[h][i] = q[h][i][best];
            pol.set(h, aug.layers[h].states[i].clone(), crate::policy::ActionChoice::Action(best));
        }
    }
    let initial = aug.init.iter().fold(F::zero(), |acc, &(i, w)| acc + w * v[0][i]);
    (pol, AugValues { v, q, initial })
}
