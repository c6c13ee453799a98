//! Ground-truth episodic tabular MDP: representation, validation, exact
//! evaluation and full-observability planning.
//!
//! Steps are 0-based throughout the code: rewards exist for steps
//! `0..H-1` and one-step kernels for steps `0..H-2` (no transition is taken
//! out of the final step).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Probability-vector tolerance. 1e-12 for f64; loosened to a few ulps for f32.
pub(crate) fn prob_tol<F: Scalar>() -> F {
    let base = F::from(1e-12).unwrap();
    let ulps = F::epsilon() * F::from(100.0).unwrap();
    if ulps > base {
        ulps
    } else {
        base
    }
}

pub(crate) fn check_prob_vector<F: Scalar>(v: &[F], what: &str) -> Result<()> {
    let mut sum = F::zero();
    for (i, &p) in v.iter().enumerate() {
        if p < F::zero() {
            return Err(Error::InvalidModel(format!(
                "{what}: negative entry {p} at index {i}"
            )));
        }
        sum = sum + p;
    }
    if (sum - F::one()).abs() > prob_tol::<F>() {
        return Err(Error::InvalidModel(format!("{what}: row sum {sum}")));
    }
    Ok(())
}

/// Episodic tabular MDP `(S, A, H, r, p)` with a fixed initial distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularMdp<F> {
    #[serde(rename = "S")]
    pub num_states: usize,
    #[serde(rename = "A")]
    pub num_actions: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    /// `reward[h][s][a]`, one table per step `h = 0..H-1`, values in [0, 1].
    pub reward: Vec<Vec<Vec<F>>>,
    /// `kernel[h][s][a][s']`, one table per step `h = 0..H-2`.
    pub kernel: Vec<Vec<Vec<Vec<F>>>>,
    pub initial_dist: Vec<F>,
}

impl<F: Scalar> TabularMdp<F> {
    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let (s_n, a_n, h_n) = (self.num_states, self.num_actions, self.horizon);
        if s_n == 0 || a_n == 0 || h_n == 0 {
            return Err(Error::InvalidModel("S, A, H must be positive".into()));
        }
        if self.reward.len() != h_n {
            return Err(Error::Dimension(format!(
                "reward has {} step tables, expected H={h_n}",
                self.reward.len()
            )));
        }
        if self.kernel.len() != h_n - 1 {
            return Err(Error::Dimension(format!(
                "kernel has {} step tables, expected H-1={}",
                self.kernel.len(),
                h_n - 1
            )));
        }
        for (h, table) in self.reward.iter().enumerate() {
            if table.len() != s_n {
                return Err(Error::Dimension(format!("reward[{h}] has {} rows", table.len())));
            }
            for (s, row) in table.iter().enumerate() {
                if row.len() != a_n {
                    return Err(Error::Dimension(format!(
                        "reward[{h}][{s}] has {} entries",
                        row.len()
                    )));
                }
                for (a, &r) in row.iter().enumerate() {
                    if r < F::zero() || r > F::one() {
                        return Err(Error::InvalidModel(format!(
                            "reward out of [0,1]: {r} at (h={h}, s={s}, a={a})"
                        )));
                    }
                }
            }
        }
        for (h, table) in self.kernel.iter().enumerate() {
            if table.len() != s_n {
                return Err(Error::Dimension(format!("kernel[{h}] has {} rows", table.len())));
            }
            for (s, per_a) in table.iter().enumerate() {
                if per_a.len() != a_n {
                    return Err(Error::Dimension(format!(
                        "kernel[{h}][{s}] has {} actions",
                        per_a.len()
                    )));
                }
                for (a, row) in per_a.iter().enumerate() {
                    if row.len() != s_n {
                        return Err(Error::Dimension(format!(
                            "kernel[{h}][{s}][{a}] has {} entries",
                            row.len()
                        )));
                    }
                    check_prob_vector(row, &format!("kernel row at (h={h}, s={s}, a={a})"))?;
                }
            }
        }
        if self.initial_dist.len() != s_n {
            return Err(Error::Dimension(format!(
                "initial_dist has {} entries",
                self.initial_dist.len()
            )));
        }
        check_prob_vector(&self.initial_dist, "initial_dist")
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self>
    where
        F: serde::de::DeserializeOwned,
    {
        let text = std::fs::read_to_string(path)?;
        let mdp: Self = serde_json::from_str(&text)?;
        mdp.validate()?;
        Ok(mdp)
    }
}

/// Step-indexed stochastic Markov policy for the fully observed MDP.
#[derive(Debug, Clone)]
pub struct MarkovPolicy<F> {
    /// `action_dist[h][s]` is a probability vector over actions.
    pub action_dist: Vec<Vec<Vec<F>>>,
}

impl<F: Scalar> MarkovPolicy<F> {
    pub fn uniform(mdp: &TabularMdp<F>) -> Self {
        let w = F::one() / F::from(mdp.num_actions).unwrap();
        Self {
            action_dist: vec![vec![vec![w; mdp.num_actions]; mdp.num_states]; mdp.horizon],
        }
    }

    pub fn deterministic(horizon: usize, num_states: usize, num_actions: usize, pick: &[Vec<usize>]) -> Self {
        let mut action_dist = vec![vec![vec![F::zero(); num_actions]; num_states]; horizon];
        for h in 0..horizon {
            for s in 0..num_states {
                action_dist[h][s][pick[h][s]] = F::one();
            }
        }
        Self { action_dist }
    }

    pub fn validate(&self, mdp: &TabularMdp<F>) -> Result<()> {
        if self.action_dist.len() != mdp.horizon {
            return Err(Error::Dimension("policy horizon mismatch".into()));
        }
        for (h, table) in self.action_dist.iter().enumerate() {
            if table.len() != mdp.num_states {
                return Err(Error::Dimension(format!("policy[{h}] state count mismatch")));
            }
            for (s, row) in table.iter().enumerate() {
                if row.len() != mdp.num_actions {
                    return Err(Error::Dimension(format!("policy[{h}][{s}] action count mismatch")));
                }
                check_prob_vector(row, &format!("policy row at (h={h}, s={s})"))?;
            }
        }
        Ok(())
    }

    /// Greedy action with ties broken by lowest index.
    pub fn greedy_action(&self, h: usize, s: usize) -> usize {
        argmax(&self.action_dist[h][s])
    }
}

/// Lowest-index argmax.
pub(crate) fn argmax<F: Scalar>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// State and state-action values from exact backward induction.
#[derive(Debug, Clone)]
pub struct ValueTable<F> {
    /// `v[h][s]` for `h = 0..H` plus a terminal all-zero row at `h = H`.
    pub v: Vec<Vec<F>>,
    /// `q[h][s][a]` for `h = 0..H-1`.
    pub q: Vec<Vec<Vec<F>>>,
}

impl<F: Scalar> ValueTable<F> {
    /// Initial value averaged over the MDP's initial distribution.
    pub fn initial_value(&self, mdp: &TabularMdp<F>) -> F {
        let mut acc = F::zero();
        for (s, &w) in mdp.initial_dist.iter().enumerate() {
            acc = acc + w * self.v[0][s];
        }
        acc
    }
}

fn expected_next<F: Scalar>(mdp: &TabularMdp<F>, h: usize, s: usize, a: usize, v_next: &[F]) -> F {
    if h + 1 == mdp.horizon {
        return F::zero();
    }
    let row = &mdp.kernel[h][s][a];
    let mut acc = F::zero();
    for (sp, &p) in row.iter().enumerate() {
        acc = acc + p * v_next[sp];
    }
    acc
}

/// Optimal deterministic Markov policy and values by backward induction.
pub fn value_iteration<F: Scalar>(mdp: &TabularMdp<F>) -> (MarkovPolicy<F>, ValueTable<F>) {
    let (s_n, a_n, h_n) = (mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut v = vec![vec![F::zero(); s_n]; h_n + 1];
    let mut q = vec![vec![vec![F::zero(); a_n]; s_n]; h_n];
    let mut pick = vec![vec![0usize; s_n]; h_n];
    for h in (0..h_n).rev() {
        for s in 0..s_n {
            for a in 0..a_n {
                q[h][s][a] = mdp.reward[h][s][a] + expected_next(mdp, h, s, a, &v[h + 1]);
            }
            let a_star = argmax(&q[h][s]);
            pick[h][s] = a_star;
            v[h][s] = q[h][s][a_star];
        }
    }
    (
        MarkovPolicy::deterministic(h_n, s_n, a_n, &pick),
        ValueTable { v, q },
    )
}

/// Exact backward-induction evaluation of a Markov policy.
pub fn evaluate_markov<F: Scalar>(mdp: &TabularMdp<F>, pol: &MarkovPolicy<F>) -> Result<ValueTable<F>> {
    pol.validate(mdp)?;
    let (s_n, a_n, h_n) = (mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut v = vec![vec![F::zero(); s_n]; h_n + 1];
    let mut q = vec![vec![vec![F::zero(); a_n]; s_n]; h_n];
    for h in (0..h_n).rev() {
        for s in 0..s_n {
            let mut vs = F::zero();
            for a in 0..a_n {
                q[h][s][a] = mdp.reward[h][s][a] + expected_next(mdp, h, s, a, &v[h + 1]);
                vs = vs + pol.action_dist[h][s][a] * q[h][s][a];
            }
            v[h][s] = vs;
        }
    }
    Ok(ValueTable { v, q })
}

/// Distribution of the state reached from `s` at step `h_from` after playing
/// the given action sequence; the empty sequence is a point mass at `s`.
pub fn multi_step_kernel<F: Scalar>(
    mdp: &TabularMdp<F>,
    h_from: usize,
    s: usize,
    actions: &[usize],
) -> Result<Vec<F>> {
    if h_from + actions.len() > mdp.horizon - 1 {
        return Err(Error::Dimension(format!(
            "action sequence of length {} from step {h_from} runs past the last kernel (H={})",
            actions.len(),
            mdp.horizon
        )));
    }
    let mut dist = vec![F::zero(); mdp.num_states];
    dist[s] = F::one();
    for (i, &a) in actions.iter().enumerate() {
        let h = h_from + i;
        let mut next = vec![F::zero(); mdp.num_states];
        for (cur, &w) in dist.iter().enumerate() {
            if w == F::zero() {
                continue;
            }
            for (sp, &p) in mdp.kernel[h][cur][a].iter().enumerate() {
                next[sp] = next[sp] + w * p;
            }
        }
        dist = next;
    }
    Ok(dist)
}

/// Draws an index from a probability vector using a single uniform draw.
pub fn sample_categorical<F: Scalar, R: Rng>(probs: &[F], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.to_f64().unwrap();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn random_simplex<F: Scalar, R: Rng>(n: usize, rng: &mut R) -> Vec<F> {
    let mut raw = vec![0.0f64; n];
    let mut sum = 0.0;
    for x in raw.iter_mut() {
        let u: f64 = rng.gen_range(1e-12..1.0);
        *x = -u.ln();
        sum += *x;
    }
    raw.iter().map(|x| F::from(x / sum).unwrap()).collect()
}

/// Random dense instance: flat-simplex kernels, uniform [0,1] rewards.
pub fn random_mdp<F: Scalar, R: Rng>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> TabularMdp<F> {
    let reward = (0..horizon)
        .map(|_| {
            (0..num_states)
                .map(|_| (0..num_actions).map(|_| F::from(rng.gen::<f64>()).unwrap()).collect())
                .collect()
        })
        .collect();
    let kernel = (0..horizon - 1)
        .map(|_| {
            (0..num_states)
                .map(|_| (0..num_actions).map(|_| random_simplex(num_states, rng)).collect())
                .collect()
        })
        .collect();
    TabularMdp {
        num_states,
        num_actions,
        horizon,
        reward,
        kernel,
        initial_dist: random_simplex(num_states, rng),
    }
}

/// Random instance with deterministic (point-mass) transitions.
pub fn random_deterministic_mdp<F: Scalar, R: Rng>(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    rng: &mut R,
) -> TabularMdp<F> {
    let mut mdp = random_mdp::<F, R>(num_states, num_actions, horizon, rng);
    for table in mdp.kernel.iter_mut() {
        for per_a in table.iter_mut() {
            for row in per_a.iter_mut() {
                let target = rng.gen_range(0..num_states);
                for (sp, p) in row.iter_mut().enumerate() {
                    *p = if sp == target { F::one() } else { F::zero() };
                }
            }
        }
    }
    let start = rng.gen_range(0..num_states);
    for (s, p) in mdp.initial_dist.iter_mut().enumerate() {
        *p = if s == start { F::one() } else { F::zero() };
    }
    mdp
}
