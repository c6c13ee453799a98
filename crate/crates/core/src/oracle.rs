//! Ground-truth quantities computed independently of the augmented-MDP
//! machinery wherever possible: exact visitation measures, the value lost to
//! an impairment and a computable upper bound on it, the two-step dichotomy
//! instance, and brute-force planning baselines for cross-checks.

use std::collections::BTreeMap;

use crate::aug::{
    belief, build_delayed_aug, build_missing_aug, optimal_aug, tau_from_mask, tau_from_schedule,
    AugMdp, AugState, BuildOpts,
};
use crate::channels::{constant_delay, ArrivalSchedule, DelayModel, MissingModel};
use crate::mdp::{value_iteration, MarkovPolicy, TabularMdp};
use crate::policy::ExecutablePolicy;
use crate::{Error, Result};

/// Per-layer occupancy over augmented states. BTreeMap keeps iteration
/// order deterministic.
#[derive(Debug, Clone)]
pub struct VisitationMeasure {
    pub layers: Vec<BTreeMap<AugState, f64>>,
}

impl VisitationMeasure {
    pub fn layer_mass(&self, h: usize) -> f64 {
        self.layers[h].values().sum()
    }
}

/// Exact visitation of an executable policy by forward recursion.
pub fn visitation(aug: &AugMdp<f64>, pol: &ExecutablePolicy<f64>) -> Result<VisitationMeasure> {
    let num_layers = aug.num_layers();
    let mut occ: Vec<Vec<f64>> = (0..num_layers).map(|h| vec![0.0; aug.layers[h].len()]).collect();
    for &(i, w) in &aug.init {
        occ[0][i] += w;
    }
    for h in 0..num_layers - 1 {
        for i in 0..aug.layers[h].len() {
            if occ[h][i] == 0.0 {
                continue;
            }
            let choice = pol.choice(h, &aug.layers[h].states[i])?;
            for a in 0..aug.num_actions {
                let pa = choice.prob(a);
                if pa == 0.0 {
                    continue;
                }
                for &(j, p) in &aug.trans[h][i][a] {
                    occ[h + 1][j] += occ[h][i] * pa * p;
                }
            }
        }
    }
    let layers = (0..num_layers)
        .map(|h| {
            let mut m = BTreeMap::new();
            for (i, st) in aug.layers[h].states.iter().enumerate() {
                if occ[h][i] > 0.0 {
                    m.insert(st.clone(), occ[h][i]);
                }
            }
            m
        })
        .collect();
    Ok(VisitationMeasure { layers })
}

/// Enumerates all inter-arrival schedules with positive probability for a
/// fixed latent trajectory.
fn schedules_for<F2>(model: &DelayModel<f64>, mut visit: F2, states: &[usize], actions: &[usize])
where
    F2: FnMut(&ArrivalSchedule, f64),
{
    let steps = model.horizon - 1;
    let mut delta = vec![0usize; steps];
    fn rec<F2: FnMut(&ArrivalSchedule, f64)>(
        model: &DelayModel<f64>,
        states: &[usize],
        actions: &[usize],
        delta: &mut Vec<usize>,
        t: usize,
        prob: f64,
        visit: &mut F2,
    ) {
        if t == delta.len() {
            visit(&ArrivalSchedule::from_deltas(model.initial_delay, delta.clone()), prob);
            return;
        }
        let pmf = &model.pmf[t][states[t]][actions[t]];
        for (g, &p) in pmf.iter().enumerate() {
            if p > 0.0 {
                delta[t] = g;
                rec(model, states, actions, delta, t + 1, prob * p, visit);
            }
        }
    }
    rec(model, states, actions, &mut delta, 0, 1.0, &mut visit);
}

/// Visitation over observable states induced by running a latent-state
/// Markov policy (which the impaired agent cannot execute) in the delayed
/// environment. Computed by exhaustive enumeration of latent trajectories
/// and arrival schedules; intended for desk-scale instances.
pub fn visitation_markov_in_delayed(
    mdp: &TabularMdp<f64>,
    model: &DelayModel<f64>,
    pol: &MarkovPolicy<f64>,
) -> Result<VisitationMeasure> {
    let horizon = mdp.horizon;
    let paths = (mdp.num_states as f64 * mdp.num_actions as f64).powi(horizon as i32)
        * (model.delta_max as f64 + 1.0).powi(horizon as i32 - 1);
    if paths > 5e7 {
        return Err(Error::InstanceTooLarge(format!(
            "{paths:.0} trajectory/schedule combinations"
        )));
    }
    let mut layers: Vec<BTreeMap<AugState, f64>> = vec![BTreeMap::new(); horizon];

    let mut states: Vec<usize> = Vec::with_capacity(horizon);
    let mut actions: Vec<usize> = Vec::with_capacity(horizon);
    #[allow(clippy::too_many_arguments)]
    fn walk(
        mdp: &TabularMdp<f64>,
        model: &DelayModel<f64>,
        pol: &MarkovPolicy<f64>,
        states: &mut Vec<usize>,
        actions: &mut Vec<usize>,
        prob: f64,
        layers: &mut [BTreeMap<AugState, f64>],
    ) {
        let h = actions.len();
        if h == mdp.horizon {
            schedules_for(model, |sched, ps| {
                for step in 0..mdp.horizon {
                    let tau = tau_from_schedule(step, states, actions, sched);
                    *layers[step].entry(tau).or_insert(0.0) += prob * ps;
                }
            }, states, actions);
            return;
        }
        let s = *states.last().unwrap();
        for a in 0..mdp.num_actions {
            let pa = pol.action_dist[h][s][a];
            if pa == 0.0 {
                continue;
            }
            actions.push(a);
            if h == mdp.horizon - 1 {
                walk(mdp, model, pol, states, actions, prob * pa, layers);
            } else {
                for sp in 0..mdp.num_states {
                    let pt = mdp.kernel[h][s][a][sp];
                    if pt > 0.0 {
                        states.push(sp);
                        walk(mdp, model, pol, states, actions, prob * pa * pt, layers);
                        states.pop();
                    }
                }
            }
            actions.pop();
        }
    }
    for s0 in 0..mdp.num_states {
        if mdp.initial_dist[s0] > 0.0 {
            states.push(s0);
            walk(mdp, model, pol, &mut states, &mut actions, mdp.initial_dist[s0], &mut layers);
            states.pop();
        }
    }
    Ok(VisitationMeasure { layers })
}

/// Value lost to delayed observations, together with a computable bound.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GapReport {
    /// Optimal value of the fully observed MDP.
    pub v_full: f64,
    /// Optimal executable value under the delay model.
    pub v_delayed: f64,
    /// `v_full - v_delayed`.
    pub gap: f64,
    /// Per-step belief-smoothing losses.
    pub e1: Vec<f64>,
    /// Per-step total variation between the two visitation measures.
    pub e2: Vec<f64>,
    /// `sum_h (e1[h] + 2 e2[h]) >= gap`.
    pub bound: f64,
}

pub fn gap_bound(mdp: &TabularMdp<f64>, model: &DelayModel<f64>) -> Result<GapReport> {
    let (pol_star, table) = value_iteration(mdp);
    let v_full: f64 = (0..mdp.num_states).map(|s| mdp.initial_dist[s] * table.v[0][s]).sum();
    let aug = build_delayed_aug(mdp, model, BuildOpts::default())?;
    let (pol_delayed, vals) = optimal_aug(&aug);
    let v_delayed = vals.initial;

    let rho_d = visitation(&aug, &pol_delayed)?;
    let rho_nd = visitation_markov_in_delayed(mdp, model, &pol_star)?;

    let mut e1 = vec![0.0; mdp.horizon];
    let mut e2 = vec![0.0; mdp.horizon];
    for h in 0..mdp.horizon {
        let mut keys: BTreeMap<&AugState, ()> = BTreeMap::new();
        for k in rho_d.layers[h].keys() {
            keys.insert(k, ());
        }
        for k in rho_nd.layers[h].keys() {
            keys.insert(k, ());
        }
        for (tau, _) in keys {
            let pd = rho_d.layers[h].get(tau).copied().unwrap_or(0.0);
            let pn = rho_nd.layers[h].get(tau).copied().unwrap_or(0.0);
            e2[h] += 0.5 * (pd - pn).abs();
            let common = pd.min(pn);
            if common > 0.0 {
                let b = belief(mdp, h, tau)?;
                let smoothed: f64 = (0..mdp.num_actions)
                    .map(|a| (0..mdp.num_states).map(|s| b[s] * mdp.reward[h][s][a]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                let pointwise: f64 = (0..mdp.num_states)
                    .map(|s| {
                        b[s] * (0..mdp.num_actions)
                            .map(|a| mdp.reward[h][s][a])
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .sum();
                e1[h] += (pointwise - smoothed) * common;
            }
        }
    }
    let bound = e1.iter().zip(&e2).map(|(x, y)| x + 2.0 * y).sum();
    Ok(GapReport { v_full, v_delayed, gap: v_full - v_delayed, e1, e2, bound })
}

/// Two-action instance whose impairment gap flips from 0 to 1/2 when the
/// constant delay grows from `d` to `d + 1`: lazy dynamics keep the initial
/// state around just long enough for a delay-`d` agent to match the
/// rewarding action at step `d`, while a delay-`d+1` agent still faces a
/// uniform belief there.
pub fn make_fig2_instance(
    d: usize,
    horizon: usize,
) -> Result<(TabularMdp<f64>, DelayModel<f64>, DelayModel<f64>)> {
    if d == 0 || d + 2 > horizon {
        return Err(Error::InvalidModel(format!(
            "dichotomy instance needs 0 < d and d + 2 <= H, got d={d}, H={horizon}"
        )));
    }
    let num_states = 2;
    let num_actions = 2;
    let mut reward = vec![vec![vec![0.0; num_actions]; num_states]; horizon];
    for s in 0..num_states {
        reward[d][s][s] = 1.0;
    }
    let mut kernel = vec![vec![vec![vec![0.0; num_states]; num_actions]; num_states]; horizon - 1];
    for (h, table) in kernel.iter_mut().enumerate() {
        for (s, per_a) in table.iter_mut().enumerate() {
            for row in per_a.iter_mut() {
                if h == d {
                    row[0] = 0.5;
                    row[1] = 0.5;
                } else {
                    row[s] = 1.0;
                }
            }
        }
    }
    let mdp = TabularMdp {
        num_states,
        num_actions,
        horizon,
        reward,
        kernel,
        initial_dist: vec![0.5, 0.5],
    };
    mdp.validate().expect("dichotomy instance is a valid MDP");
    let short = constant_delay(d, num_states, num_actions, horizon)?;
    let long = constant_delay(d + 1, num_states, num_actions, horizon)?;
    Ok((mdp, short, long))
}

const POLICY_ENUM_LIMIT: f64 = 1e6;

fn policy_space(aug: &AugMdp<f64>) -> Result<Vec<(usize, usize)>> {
    let mut slots = Vec::new();
    for (h, layer) in aug.layers.iter().enumerate() {
        for i in 0..layer.len() {
            slots.push((h, i));
        }
    }
    let count = (aug.num_actions as f64).powi(slots.len() as i32);
    if count > POLICY_ENUM_LIMIT {
        return Err(Error::InstanceTooLarge(format!(
            "{count:.0} deterministic policies over {} states",
            slots.len()
        )));
    }
    Ok(slots)
}

fn require_homogeneous(model: &DelayModel<f64>) -> Result<()> {
    let base = &model.pmf[0][0][0];
    for table in &model.pmf {
        for per_a in table {
            for row in per_a {
                if row != base {
                    return Err(Error::InvalidModel(
                        "brute force requires a state-independent delay model".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Best achievable expected return over all deterministic executable
/// policies, computed by exhaustive policy enumeration and direct simulation
/// arithmetic over latent trajectories and arrival schedules. Deliberately
/// avoids the augmented transition/reward construction so it can serve as an
/// independent check of it.
pub fn brute_force_optimal_delayed(mdp: &TabularMdp<f64>, model: &DelayModel<f64>) -> Result<f64> {
    require_homogeneous(model)?;
    let aug = build_delayed_aug(mdp, model, BuildOpts::default())?;
    let slots = policy_space(&aug)?;
    let slot_of = |h: usize, i: usize| slots.iter().position(|&(sh, si)| (sh, si) == (h, i)).unwrap();

    // schedules are trajectory-independent for homogeneous models
    let mut schedules: Vec<(ArrivalSchedule, f64)> = Vec::new();
    let dummy = vec![0usize; mdp.horizon];
    schedules_for(model, |s, p| schedules.push((s.clone(), p)), &dummy, &dummy);

    let num_policies = (aug.num_actions as u64).pow(slots.len() as u32);
    let mut best = f64::NEG_INFINITY;
    let mut choice = vec![0usize; slots.len()];
    for code in 0..num_policies {
        let mut c = code;
        for slot in choice.iter_mut() {
            *slot = (c % aug.num_actions as u64) as usize;
            c /= aug.num_actions as u64;
        }
        let mut value = 0.0;
        for (sched, ps) in &schedules {
            #[allow(clippy::too_many_arguments)]
            fn walk(
                mdp: &TabularMdp<f64>,
                aug: &AugMdp<f64>,
                choice: &[usize],
                slot_of: &dyn Fn(usize, usize) -> usize,
                sched: &ArrivalSchedule,
                states: &mut Vec<usize>,
                actions: &mut Vec<usize>,
                prob: f64,
                acc: &mut f64,
            ) {
                let h = actions.len();
                let s = *states.last().unwrap();
                let tau = tau_from_schedule(h, states, actions, sched);
                let i = aug.layers[h].index_of(&tau).expect("reachable state enumerated");
                let a = choice[slot_of(h, i)];
                *acc += prob * mdp.reward[h][s][a];
                if h + 1 == mdp.horizon {
                    return;
                }
                actions.push(a);
                for sp in 0..mdp.num_states {
                    let pt = mdp.kernel[h][s][a][sp];
                    if pt > 0.0 {
                        states.push(sp);
                        walk(mdp, aug, choice, slot_of, sched, states, actions, prob * pt, acc);
                        states.pop();
                    }
                }
                actions.pop();
            }
            let mut acc = 0.0;
            for s0 in 0..mdp.num_states {
                if mdp.initial_dist[s0] > 0.0 {
                    let mut states = vec![s0];
                    let mut actions = Vec::new();
                    walk(
                        mdp,
                        &aug,
                        &choice,
                        &slot_of,
                        sched,
                        &mut states,
                        &mut actions,
                        mdp.initial_dist[s0],
                        &mut acc,
                    );
                }
            }
            value += ps * acc;
        }
        best = best.max(value);
    }
    Ok(best)
}

/// Missing-observation counterpart of [`brute_force_optimal_delayed`].
pub fn brute_force_optimal_missing(mdp: &TabularMdp<f64>, model: &MissingModel<f64>) -> Result<f64> {
    let aug = build_missing_aug(mdp, model, BuildOpts::default())?;
    let slots = policy_space(&aug)?;
    let slot_of = |h: usize, i: usize| slots.iter().position(|&(sh, si)| (sh, si) == (h, i)).unwrap();

    // enumerate survival masks for s_1..s_{H-1}
    let bits = mdp.horizon - 1;
    let mut masks: Vec<(Vec<bool>, f64)> = Vec::new();
    for code in 0u64..(1 << bits) {
        let mask: Vec<bool> = (0..bits).map(|b| code >> b & 1 == 1).collect();
        let mut p = 1.0;
        for (h, &m) in mask.iter().enumerate() {
            let lam = model.lambda[h];
            p *= if m { lam } else { 1.0 - lam };
        }
        if p > 0.0 {
            masks.push((mask, p));
        }
    }

    let num_policies = (aug.num_actions as u64).pow(slots.len() as u32);
    let mut best = f64::NEG_INFINITY;
    let mut choice = vec![0usize; slots.len()];
    for code in 0..num_policies {
        let mut c = code;
        for slot in choice.iter_mut() {
            *slot = (c % aug.num_actions as u64) as usize;
            c /= aug.num_actions as u64;
        }
        let mut value = 0.0;
        for (mask, pm) in &masks {
            #[allow(clippy::too_many_arguments)]
            fn walk(
                mdp: &TabularMdp<f64>,
                aug: &AugMdp<f64>,
                choice: &[usize],
                slot_of: &dyn Fn(usize, usize) -> usize,
                mask: &[bool],
                states: &mut Vec<usize>,
                actions: &mut Vec<usize>,
                prob: f64,
                acc: &mut f64,
            ) {
                let h = actions.len();
                let s = *states.last().unwrap();
                let tau = tau_from_mask(h, states, actions, mask);
                let i = aug.layers[h].index_of(&tau).expect("reachable state enumerated");
                let a = choice[slot_of(h, i)];
                *acc += prob * mdp.reward[h][s][a];
                if h + 1 == mdp.horizon {
                    return;
                }
                actions.push(a);
                for sp in 0..mdp.num_states {
                    let pt = mdp.kernel[h][s][a][sp];
                    if pt > 0.0 {
                        states.push(sp);
                        walk(mdp, aug, choice, slot_of, mask, states, actions, prob * pt, acc);
                        states.pop();
                    }
                }
                actions.pop();
            }
            let mut acc = 0.0;
            for s0 in 0..mdp.num_states {
                if mdp.initial_dist[s0] > 0.0 {
                    let mut states = vec![s0];
                    let mut actions = Vec::new();
                    walk(
                        mdp,
                        &aug,
                        &choice,
                        &slot_of,
                        mask,
                        &mut states,
                        &mut actions,
                        mdp.initial_dist[s0],
                        &mut acc,
                    );
                }
            }
            value += pm * acc;
        }
        best = best.max(value);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aug::evaluate_aug;
    use crate::channels::geometric_delay;
    use crate::mdp::{random_deterministic_mdp, random_mdp};
    use crate::policy::ActionChoice;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dichotomy_gap_flips_with_one_extra_step_of_delay() {
        for d in 1..=2 {
            let (mdp, short, long) = make_fig2_instance(d, d + 2).unwrap();
            let short_report = gap_bound(&mdp, &short).unwrap();
            let long_report = gap_bound(&mdp, &long).unwrap();
            assert!((short_report.v_full - 1.0).abs() < 1e-12);
            assert!(short_report.gap.abs() < 1e-12, "d={d}: {}", short_report.gap);
            assert!((long_report.gap - 0.5).abs() < 1e-12, "d={d}: {}", long_report.gap);
            assert!(short_report.bound >= short_report.gap - 1e-12);
            assert!(long_report.bound >= long_report.gap - 1e-12);
        }
    }

    #[test]
    fn visitation_layers_are_probability_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mdp = random_mdp::<f64, _>(3, 2, 4, &mut rng);
        let model = geometric_delay::<f64>(0.4, 3, 2, 4).unwrap();
        let aug = build_delayed_aug(&mdp, &model, BuildOpts::default()).unwrap();
        let (pol, _) = optimal_aug(&aug);
        let rho = visitation(&aug, &pol).unwrap();
        let (markov, _) = value_iteration(&mdp);
        let rho_nd = visitation_markov_in_delayed(&mdp, &model, &markov).unwrap();
        for h in 0..4 {
            assert!((rho.layer_mass(h) - 1.0).abs() < 1e-12);
            let mass: f64 = rho_nd.layers[h].values().sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn occupancy_weighted_rewards_equal_the_evaluated_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let mdp = random_mdp::<f64, _>(3, 2, 4, &mut rng);
            let model = geometric_delay::<f64>(0.6, 3, 2, 4).unwrap();
            let aug = build_delayed_aug(&mdp, &model, BuildOpts::default()).unwrap();
            let (pol, vals) = optimal_aug(&aug);
            let rho = visitation(&aug, &pol).unwrap();
            let mut total = 0.0;
            for h in 0..aug.num_layers() {
                for (tau, &mass) in &rho.layers[h] {
                    let i = aug.index_of(h, tau).unwrap();
                    let choice = pol.choice(h, tau).unwrap();
                    for a in 0..aug.num_actions {
                        total += mass * choice.prob(a) * aug.reward[h][i][a];
                    }
                }
            }
            assert!((total - vals.initial).abs() < 1e-10, "{total} vs {}", vals.initial);
        }
    }

    #[test]
    fn open_loop_policy_agrees_across_both_visitation_paths() {
        // an action distribution shared by every state is executable both as
        // a Markov policy and as an augmented policy, so the two independent
        // visitation computations must coincide exactly
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..5 {
            let mdp = random_mdp::<f64, _>(2, 2, 3, &mut rng);
            let p0: f64 = rng.gen_range(0.1..0.9);
            let dist = vec![p0, 1.0 - p0];
            let model = geometric_delay::<f64>(rng.gen_range(0.3..0.9), 2, 2, 3).unwrap();
            let aug = build_delayed_aug(&mdp, &model, BuildOpts::default()).unwrap();
            let mut pol = ExecutablePolicy::new(aug.num_layers(), 2);
            for (h, layer) in aug.layers.iter().enumerate() {
                for st in &layer.states {
                    pol.set(h, st.clone(), ActionChoice::Dist(dist.clone()));
                }
            }
            let markov = MarkovPolicy { action_dist: vec![vec![dist.clone(); 2]; 3] };
            let rho_aug = visitation(&aug, &pol).unwrap();
            let rho_enum = visitation_markov_in_delayed(&mdp, &model, &markov).unwrap();
            for h in 0..3 {
                for (tau, &p) in &rho_enum.layers[h] {
                    let q = rho_aug.layers[h].get(tau).copied().unwrap_or(0.0);
                    assert!((p - q).abs() < 1e-12, "layer {h}, {tau}: {p} vs {q}");
                }
                for (tau, &q) in &rho_aug.layers[h] {
                    assert!(rho_enum.layers[h].contains_key(tau) || q < 1e-15, "extra {tau}");
                }
            }
        }
    }

    #[test]
    fn bound_dominates_gap_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for k in 0..20 {
            let mdp = random_mdp::<f64, _>(2 + k % 2, 2, 3, &mut rng);
            let s = mdp.num_states;
            let model = if k % 2 == 0 {
                geometric_delay::<f64>(rng.gen_range(0.3..0.95), s, 2, 3).unwrap()
            } else {
                constant_delay::<f64>(1, s, 2, 3).unwrap()
            };
            let report = gap_bound(&mdp, &model).unwrap();
            assert!(report.gap >= -1e-12);
            assert!(
                report.bound >= report.gap - 1e-10,
                "bound {} < gap {}",
                report.bound,
                report.gap
            );
        }
    }

    #[test]
    fn deterministic_dynamics_have_no_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10 {
            let mdp = random_deterministic_mdp::<f64, _>(3, 2, 4, &mut rng);
            let model = constant_delay::<f64>(2, 3, 2, 4).unwrap();
            let report = gap_bound(&mdp, &model).unwrap();
            assert!(report.gap.abs() < 1e-10, "gap {}", report.gap);
        }
    }

    #[test]
    fn brute_force_matches_backward_induction_delayed() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for k in 0..4 {
            let mdp = random_mdp::<f64, _>(2, 2, if k % 2 == 0 { 3 } else { 2 }, &mut rng);
            let model = if k % 2 == 0 {
                constant_delay::<f64>(1, 2, 2, 3).unwrap()
            } else {
                geometric_delay::<f64>(0.6, 2, 2, 2).unwrap()
            };
            let aug = build_delayed_aug(&mdp, &model, BuildOpts::default()).unwrap();
            let (_, vals) = optimal_aug(&aug);
            let brute = brute_force_optimal_delayed(&mdp, &model).unwrap();
            assert!((vals.initial - brute).abs() < 1e-10, "{} vs {brute}", vals.initial);
        }
    }

    #[test]
    fn brute_force_matches_backward_induction_missing() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for k in 0..4 {
            let horizon = if k % 2 == 0 { 3 } else { 2 };
            let mdp = random_mdp::<f64, _>(2, 2, horizon, &mut rng);
            let lam = if k % 2 == 0 { 1.0 } else { 0.7 };
            let model = MissingModel::constant(lam, horizon).unwrap();
            let aug = build_missing_aug(&mdp, &model, BuildOpts::default()).unwrap();
            let (_, vals) = optimal_aug(&aug);
            let brute = brute_force_optimal_missing(&mdp, &model).unwrap();
            assert!((vals.initial - brute).abs() < 1e-10, "{} vs {brute}", vals.initial);
        }
    }

    #[test]
    fn optimal_executable_policy_dominates_random_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let mdp = random_mdp::<f64, _>(3, 2, 4, &mut rng);
        let model = geometric_delay::<f64>(0.5, 3, 2, 4).unwrap();
        let aug = build_delayed_aug(&mdp, &model, BuildOpts::default()).unwrap();
        let (_, vals) = optimal_aug(&aug);
        for _ in 0..50 {
            let pol = ExecutablePolicy::random_on(&aug, &mut rng);
            let v = evaluate_aug(&aug, &pol).unwrap();
            assert!(v.initial <= vals.initial + 1e-12);
        }
    }
}
