//! Observation impairment models: stochastic inter-arrival delays and lossy
//! (missing) observation channels, plus their seeded samplers.
//!
//! Conventions (0-based): the observation of step `h` becomes visible at time
//! `h + d[h]`. `pmf[h][s][a]` is the distribution of the inter-arrival gap
//! `Δ_h = d[h+1] - d[h]`, conditioned on `(s_h, a_h)`. Inter-arrivals are
//! capped at `Δ_max = H` with the tail mass folded into `Δ = H`: anything
//! later than a full horizon arrives after the episode flush anyway.

use rand::Rng;

use crate::mdp::{check_prob_vector, sample_categorical};
use crate::{Error, Result, Scalar};

/// Conditional inter-arrival model (Assumption: delays arrive in order,
/// `Δ ≥ 0`, conditionally independent of the MDP transitions given `(s, a)`).
#[derive(Debug, Clone)]
pub struct DelayModel<F> {
    /// `pmf[h][s][a][δ]` over `δ = 0..=delta_max`.
    pub pmf: Vec<Vec<Vec<Vec<F>>>>,
    pub delta_max: usize,
    /// Delay of the very first observation: `s_0` becomes visible at time
    /// `initial_delay`. Zero for the stochastic models; `d` for constant
    /// delay, where the agent starts the episode unobserved.
    pub initial_delay: usize,
    pub horizon: usize,
}

impl<F: Scalar> DelayModel<F> {
    pub fn validate(&self) -> Result<()> {
        if self.pmf.len() != self.horizon {
            return Err(Error::Dimension(format!(
                "delay pmf has {} step tables, expected H={}",
                self.pmf.len(),
                self.horizon
            )));
        }
        if self.initial_delay >= self.horizon {
            return Err(Error::InvalidModel(format!(
                "initial delay {} must be below the horizon {}",
                self.initial_delay, self.horizon
            )));
        }
        for (h, table) in self.pmf.iter().enumerate() {
            for (s, per_a) in table.iter().enumerate() {
                for (a, row) in per_a.iter().enumerate() {
                    if row.len() != self.delta_max + 1 {
                        return Err(Error::Dimension(format!(
                            "delay pmf at (h={h}, s={s}, a={a}) has {} entries, expected {}",
                            row.len(),
                            self.delta_max + 1
                        )));
                    }
                    check_prob_vector(row, &format!("delay pmf at (h={h}, s={s}, a={a})"))?;
                }
            }
        }
        Ok(())
    }

    fn homogeneous(row: Vec<F>, initial_delay: usize, num_states: usize, num_actions: usize, horizon: usize) -> Self {
        let delta_max = row.len() - 1;
        let pmf = vec![vec![vec![row; num_actions]; num_states]; horizon];
        DelayModel { pmf, delta_max, initial_delay, horizon }
    }
}

/// Folds the tail of a raw pmf (support `0..raw.len()`) into `Δ = cap`.
fn fold_tail<F: Scalar>(raw: &[F], cap: usize) -> Vec<F> {
    let mut row = vec![F::zero(); cap + 1];
    for (delta, &p) in raw.iter().enumerate() {
        row[delta.min(cap)] = row[delta.min(cap)] + p;
    }
    row
}

/// Geometric inter-arrivals: `pmf(δ) = p(1-p)^δ` for `δ < H`, with the
/// remaining mass `(1-p)^H` folded into `δ = H`.
pub fn geometric_delay<F: Scalar>(
    p: F,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> Result<DelayModel<F>> {
    if p <= F::zero() || p > F::one() {
        return Err(Error::InvalidModel(format!("geometric parameter p={p} out of (0,1]")));
    }
    let mut row = Vec::with_capacity(horizon + 1);
    let mut survival = F::one(); // (1-p)^δ
    for _ in 0..horizon {
        row.push(p * survival);
        survival = survival * (F::one() - p);
    }
    row.push(survival);
    let model = DelayModel::homogeneous(row, 0, num_states, num_actions, horizon);
    model.validate()?;
    Ok(model)
}

/// Constant-delay MDP: every observation arrives exactly `d` steps late.
/// The first observation is itself delayed (`initial_delay = d`); all
/// subsequent inter-arrivals are zero, so observations stream in one per
/// step once the first one lands.
pub fn constant_delay<F: Scalar>(
    d: usize,
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> Result<DelayModel<F>> {
    if d >= horizon {
        return Err(Error::InvalidModel(format!(
            "constant delay d={d} must be below the horizon {horizon}"
        )));
    }
    let mut row = vec![F::zero(); horizon + 1];
    row[0] = F::one();
    Ok(DelayModel::homogeneous(row, d, num_states, num_actions, horizon))
}

/// State/action-independent inter-arrival table, tail-folded at `Δ = H`.
pub fn table_delay<F: Scalar>(
    raw_pmf: &[F],
    num_states: usize,
    num_actions: usize,
    horizon: usize,
) -> Result<DelayModel<F>> {
    let row = fold_tail(raw_pmf, horizon);
    let model = DelayModel::homogeneous(row, 0, num_states, num_actions, horizon);
    model.validate()?;
    Ok(model)
}

/// Lossy observation channel: the observation produced by the transition out
/// of step `h` (i.e. `s_{h+1}`) survives independently with probability
/// `lambda[h]`. The initial state is always delivered.
#[derive(Debug, Clone)]
pub struct MissingModel<F> {
    pub lambda: Vec<F>,
    pub lambda_floor: F,
}

impl<F: Scalar> MissingModel<F> {
    pub fn new(lambda: Vec<F>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidModel("empty observable-rate vector".into()));
        }
        let mut floor = F::one();
        for (h, &l) in lambda.iter().enumerate() {
            if l <= F::zero() || l > F::one() {
                return Err(Error::InvalidModel(format!(
                    "observable rate lambda[{h}]={l} out of (0,1]"
                )));
            }
            if l < floor {
                floor = l;
            }
        }
        Ok(MissingModel { lambda, lambda_floor: floor })
    }

    pub fn constant(l: F, horizon: usize) -> Result<Self> {
        Self::new(vec![l; horizon])
    }
}

/// Realized arrival pattern of one episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSchedule {
    /// `d[h]`: delay of the observation of step `h` (it lands at `h + d[h]`).
    pub d: Vec<usize>,
    /// `delta[h] = d[h+1] - d[h]`.
    pub delta: Vec<usize>,
}

impl ArrivalSchedule {
    pub fn from_deltas(initial_delay: usize, delta: Vec<usize>) -> Self {
        let mut d = Vec::with_capacity(delta.len() + 1);
        d.push(initial_delay);
        for &g in &delta {
            d.push(d.last().unwrap() + g);
        }
        ArrivalSchedule { d, delta }
    }

    /// Index of the newest observation visible at time `h`, if any.
    pub fn nearest_visible(&self, h: usize) -> Option<usize> {
        let mut t = None;
        for (i, &di) in self.d.iter().enumerate() {
            if i + di <= h {
                t = Some(i);
            } else {
                break;
            }
        }
        t
    }
}

/// Draws one episode's inter-arrivals along a realized trajectory.
pub fn sample_schedule<F: Scalar, R: Rng>(
    model: &DelayModel<F>,
    trajectory: &[(usize, usize)],
    rng: &mut R,
) -> ArrivalSchedule {
    assert_eq!(trajectory.len(), model.horizon, "trajectory length must equal H");
    let delta = (0..model.horizon.saturating_sub(1))
        .map(|h| {
            let (s, a) = trajectory[h];
            sample_categorical(&model.pmf[h][s][a], rng)
        })
        .collect();
    ArrivalSchedule::from_deltas(model.initial_delay, delta)
}

/// Draws one episode's survival mask: `mask[h]` is the visibility of the
/// observation produced at step `h` (i.e. of `s_{h+1}`).
pub fn sample_mask<F: Scalar, R: Rng>(model: &MissingModel<F>, rng: &mut R) -> Vec<bool> {
    model
        .lambda
        .iter()
        .map(|l| rng.gen::<f64>() < l.to_f64().unwrap())
        .collect()
}
