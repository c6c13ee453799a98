//! Online learners for the impaired environments: optimistic planning on an
//! estimated augmented MDP, with exact-DP regret accounting. Pinned to f64.

mod delayed;
mod missing;
mod vi;

pub use delayed::{bonus_delayed, run_alg1, DelayedCounts};
pub use missing::{run_alg2, run_alg3, MissingCounts};
pub use vi::optimistic_vi;

/// Knobs shared by all learners.
#[derive(Debug, Clone, Copy)]
pub struct LearnerConfig {
    pub episodes: usize,
    /// Confidence level in the log factor.
    pub gamma: f64,
    /// Bonus / confidence-radius scale.
    pub c: f64,
    /// Cap forwarded to the augmented-MDP builders.
    pub aug_cap: usize,
}

impl LearnerConfig {
    pub fn new(episodes: usize) -> Self {
        Self { episodes, gamma: 0.1, c: 1.0, aug_cap: 2_000_000 }
    }

    /// Log factor `ln(S A K H / gamma)` used by every bonus.
    pub(crate) fn iota(&self, num_states: usize, num_actions: usize, horizon: usize) -> f64 {
        ((num_states * num_actions * self.episodes.max(1) * horizon) as f64 / self.gamma).ln()
    }
}

/// A finished run: the regret trace plus the final greedy policy.
#[derive(Debug, Clone)]
pub struct AlgRun {
    pub trace: crate::harness::RegretTrace,
    pub final_policy: crate::policy::ExecutablePolicy<f64>,
}

/// Moves up to `budget / 2` of probability mass onto the highest-utility
/// coordinate, taking it from the lowest-utility ones first: the maximizer
/// of `q' · util` over the L1 ball of radius `budget` around `q`.
pub(crate) fn optimistic_shift(q: &[f64], util: &[f64], budget: f64) -> Vec<f64> {
    let mut out = q.to_vec();
    if budget <= 0.0 {
        return out;
    }
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&i, &j| util[i].partial_cmp(&util[j]).unwrap().then(i.cmp(&j)));
    let best = *order.last().unwrap();
    let mut add = (budget / 2.0).min(1.0 - out[best]);
    out[best] += add;
    for &i in &order {
        if i == best || add <= 0.0 {
            continue;
        }
        let take = out[i].min(add);
        out[i] -= take;
        add -= take;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::optimistic_shift;

    #[test]
    fn shift_moves_mass_toward_high_utility() {
        let q = vec![0.5, 0.3, 0.2];
        let util = vec![0.0, 1.0, 2.0];
        let shifted = optimistic_shift(&q, &util, 0.4);
        assert!((shifted.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((shifted[2] - 0.4).abs() < 1e-12);
        assert!((shifted[0] - 0.3).abs() < 1e-12);
        let base: f64 = q.iter().zip(&util).map(|(a, b)| a * b).sum();
        let new: f64 = shifted.iter().zip(&util).map(|(a, b)| a * b).sum();
        assert!(new >= base);
        // a huge budget pushes everything onto the best coordinate
        let all_in = optimistic_shift(&q, &util, 10.0);
        assert_eq!(all_in, vec![0.0, 0.0, 1.0]);
        // zero budget is a no-op
        assert_eq!(optimistic_shift(&q, &util, 0.0), q);
    }
}
