//! Executable policies: maps from (step, observable history state) to an
//! action or action distribution. This is the policy class the impaired
//! environments physically admit.

use std::collections::HashMap;

use rand::Rng;

use crate::aug::{AugMdp, AugState};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone)]
pub enum ActionChoice<F> {
    Action(usize),
    Dist(Vec<F>),
}

impl<F: Scalar> ActionChoice<F> {
    pub fn prob(&self, a: usize) -> F {
        match self {
            ActionChoice::Action(pick) => {
                if *pick == a {
                    F::one()
                } else {
                    F::zero()
                }
            }
            ActionChoice::Dist(d) => d[a],
        }
    }

    pub fn sample<R: Rng>(&self, num_actions: usize, rng: &mut R) -> usize {
        match self {
            ActionChoice::Action(pick) => *pick,
            ActionChoice::Dist(d) => {
                let _ = num_actions;
                crate::mdp::sample_categorical(d, rng)
            }
        }
    }
}

/// Per-layer map from augmented states to action choices.
#[derive(Debug, Clone)]
pub struct ExecutablePolicy<F> {
    pub layers: Vec<HashMap<AugState, ActionChoice<F>>>,
    pub num_actions: usize,
    /// When set, states absent from the map resolve to the uniform
    /// distribution instead of an error (used e.g. for the arbitrary
    /// post-horizon steps of the past-reward construction).
    pub default_uniform: bool,
}

impl<F: Scalar> ExecutablePolicy<F> {
    pub fn new(num_layers: usize, num_actions: usize) -> Self {
        Self {
            layers: vec![HashMap::new(); num_layers],
            num_actions,
            default_uniform: false,
        }
    }

    pub fn with_uniform_default(mut self) -> Self {
        self.default_uniform = true;
        self
    }

    pub fn set(&mut self, layer: usize, state: AugState, choice: ActionChoice<F>) {
        self.layers[layer].insert(state, choice);
    }

    pub fn choice(&self, layer: usize, state: &AugState) -> Result<ActionChoice<F>> {
        match self.layers.get(layer).and_then(|m| m.get(state)) {
            Some(c) => Ok(c.clone()),
            None if self.default_uniform => {
                let w = F::one() / F::from(self.num_actions).unwrap();
                Ok(ActionChoice::Dist(vec![w; self.num_actions]))
            }
            None => Err(Error::PolicyGap {
                layer,
                state: format!("{state:?}"),
            }),
        }
    }

    /// Uniformly random stochastic policy on every state of `aug`.
    pub fn random_on<R: Rng>(aug: &AugMdp<F>, rng: &mut R) -> Self {
        let mut pol = Self::new(aug.layers.len(), aug.num_actions);
        for (h, layer) in aug.layers.iter().enumerate() {
            for state in &layer.states {
                let mut raw: Vec<f64> = (0..aug.num_actions).map(|_| rng.gen_range(0.01..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                for x in raw.iter_mut() {
                    *x /= sum;
                }
                pol.set(
                    h,
                    state.clone(),
                    ActionChoice::Dist(raw.into_iter().map(|x| F::from(x).unwrap()).collect()),
                );
            }
        }
        pol
    }

    /// Lifts a Markov policy onto an augmented MDP whose states are all
    /// freshly observed (zero-delay / fully observable constructions).
    pub fn lift_markov(markov: &crate::mdp::MarkovPolicy<F>, aug: &AugMdp<F>) -> Result<Self> {
        let mut pol = Self::new(aug.layers.len(), aug.num_actions);
        for (h, layer) in aug.layers.iter().enumerate() {
            for state in &layer.states {
                match state {
                    AugState::Observed { last_seen, window, staleness } if window.is_empty() && *staleness == 0 => {
                        let dist = markov.action_dist[h.min(markov.action_dist.len() - 1)][*last_seen].clone();
                        pol.set(h, state.clone(), ActionChoice::Dist(dist));
                    }
                    AugState::Drained => {
                        pol.set(h, state.clone(), ActionChoice::Action(0));
                    }
                    _ => {
                        return Err(Error::InvalidModel(
                            "lift_markov requires a fully observed augmented MDP".into(),
                        ))
                    }
                }
            }
        }
        Ok(pol)
    }
}
