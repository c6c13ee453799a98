//! Optimistic value iteration on an augmented MDP with an additive bonus,
//! clipped at the maximum attainable return.

use crate::aug::{AugMdp, AugValues};
use crate::mdp::argmax;
use crate::policy::{ActionChoice, ExecutablePolicy};

/// Backward induction with `Q = min(cap, r + bonus + p·V)`; greedy ties go
/// to the lowest action index. `bonus[h][i][a]` is indexed like the reward.
pub fn optimistic_vi(
    aug: &AugMdp<f64>,
    bonus: &[Vec<Vec<f64>>],
    cap: f64,
) -> (ExecutablePolicy<f64>, AugValues<f64>) {
    let num_layers = aug.num_layers();
    let mut pol = ExecutablePolicy::new(num_layers, aug.num_actions);
    let mut v: Vec<Vec<f64>> = (0..num_layers).map(|h| vec![0.0; aug.layers[h].len()]).collect();
    let mut q: Vec<Vec<Vec<f64>>> = (0..num_layers)
        .map(|h| vec![vec![0.0; aug.num_actions]; aug.layers[h].len()])
        .collect();
    for h in (0..num_layers).rev() {
        for i in 0..aug.layers[h].len() {
            for a in 0..aug.num_actions {
                let mut qa = aug.reward[h][i][a] + bonus[h][i][a];
                for &(j, p) in &aug.trans[h][i][a] {
                    qa += p * v[h + 1][j];
                }
                q[h][i][a] = qa.min(cap);
            }
            let best = argmax(&q[h][i]);
            v[h][i] = q[h][i][best];
            pol.set(h, aug.layers[h].states[i].clone(), ActionChoice::Action(best));
        }
    }
    let initial = aug.init.iter().map(|&(i, w)| w * v[0][i]).sum();
    (pol, AugValues { v, q, initial })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aug::{build_delayed_aug, optimal_aug, BuildOpts};
    use crate::channels::geometric_delay;
    use crate::mdp::random_mdp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_bonus(aug: &AugMdp<f64>) -> Vec<Vec<Vec<f64>>> {
        (0..aug.num_layers())
            .map(|h| vec![vec![0.0; aug.num_actions]; aug.layers[h].len()])
            .collect()
    }

    #[test]
    fn zero_bonus_recovers_exact_planning() {
        let mdp = random_mdp::<f64, _>(3, 2, 4, &mut ChaCha8Rng::seed_from_u64(71));
        let model = geometric_delay::<f64>(0.5, 3, 2, 4).unwrap();
        let aug = build_delayed_aug(&mdp, &model, BuildOpts::default()).unwrap();
        let (_, exact) = optimal_aug(&aug);
        let (_, optimistic) = optimistic_vi(&aug, &zero_bonus(&aug), f64::INFINITY);
        assert!((exact.initial - optimistic.initial).abs() < 1e-12);
    }

    #[test]
    fn bonus_inflates_and_cap_saturates() {
        let mdp = random_mdp::<f64, _>(2, 2, 3, &mut ChaCha8Rng::seed_from_u64(73));
        let model = geometric_delay::<f64>(0.5, 2, 2, 3).unwrap();
        let aug = build_delayed_aug(&mdp, &model, BuildOpts::default()).unwrap();
        let (_, exact) = optimal_aug(&aug);
        let mut bonus = zero_bonus(&aug);
        for layer in bonus.iter_mut() {
            for row in layer.iter_mut() {
                for b in row.iter_mut() {
                    *b = 0.25;
                }
            }
        }
        let h = 3.0;
        let (_, inflated) = optimistic_vi(&aug, &bonus, h);
        assert!(inflated.initial >= exact.initial - 1e-12);
        assert!(inflated.initial <= h + 1e-12);
        for layer in bonus.iter_mut() {
            for row in layer.iter_mut() {
                for b in row.iter_mut() {
                    *b = 100.0;
                }
            }
        }
        let (_, saturated) = optimistic_vi(&aug, &bonus, h);
        assert!((saturated.initial - h).abs() < 1e-12);
    }
}
