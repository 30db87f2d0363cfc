//! Shared oracles for the integration suites: everything here computes
//! from first principles and stays independent of the library paths it
//! checks.

#![allow(dead_code)]

use equilearn_core::dist::FiniteDist;
use equilearn_core::dynamics::DynamicsTrace;
use equilearn_core::gadget::{gadget_utility, GadgetOutcome, History, KibitzerAction, RankTCce};
use equilearn_core::game::{BayesianGame, BehaviorStrategy, PureStrategy};

pub fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

/// Distribution of the non-target type under the conditioned prior,
/// recomputed directly from the prior table.
pub fn conditional_other_type_oracle(
    game: &BayesianGame,
    target: usize,
    target_type: usize,
) -> FiniteDist {
    let other = 1 - target;
    let rows = game
        .conditional_type_profiles(target, target_type)
        .expect("positive-mass type");
    let mut weights = vec![0.0; game.type_count(other)];
    for (types, w) in rows {
        weights[types[other]] += w;
    }
    FiniteDist::from_weights(weights).unwrap()
}

/// All positive-probability outcomes of one gadget round under the
/// given per-gadget strategies, with their probabilities.
pub fn enumerate_round(
    game: &BayesianGame,
    players: &[BehaviorStrategy; 2],
    kibitzer: &FiniteDist,
) -> Vec<(GadgetOutcome, f64)> {
    let mut out = Vec::new();
    for idx in 0..KibitzerAction::count(game) {
        let pk = kibitzer.prob(idx);
        if pk == 0.0 {
            continue;
        }
        let a_k = KibitzerAction::from_index(game, idx).unwrap();
        let other = 1 - a_k.target;
        let other_types = conditional_other_type_oracle(game, a_k.target, a_k.target_type);
        for theta_other in 0..game.type_count(other) {
            let pt = other_types.prob(theta_other);
            if pt == 0.0 {
                continue;
            }
            let mut types = [0usize; 2];
            types[a_k.target] = a_k.target_type;
            types[other] = theta_other;
            for a1 in 0..game.action_count(0) {
                let p1 = players[0].action_dist(types[0]).prob(a1);
                if p1 == 0.0 {
                    continue;
                }
                for a2 in 0..game.action_count(1) {
                    let p2 = players[1].action_dist(types[1]).prob(a2);
                    if p2 == 0.0 {
                        continue;
                    }
                    out.push((
                        GadgetOutcome {
                            kibitzer: a_k,
                            types,
                            actions: [a1, a2],
                        },
                        pk * pt * p1 * p2,
                    ));
                }
            }
        }
    }
    out
}

fn exact_component_utilities(
    game: &BayesianGame,
    component: &equilearn_core::gadget::CceComponent,
    history: &History,
    depth_left: usize,
    repetitions: usize,
) -> [f64; 3] {
    if depth_left == 0 {
        return [0.0; 3];
    }
    let players = [
        component.player(0).behavior_at(history),
        component.player(1).behavior_at(history),
    ];
    let kibitzer = component.kibitzer().dist_at(history);
    let mut total = [0.0; 3];
    for (outcome, prob) in enumerate_round(game, &players, &kibitzer) {
        let u = gadget_utility(game, &outcome).unwrap();
        for (slot, v) in total.iter_mut().zip(u) {
            *slot += prob * v / repetitions as f64;
        }
        let mut next = history.clone();
        next.push(outcome);
        let tail = exact_component_utilities(game, component, &next, depth_left - 1, repetitions);
        for (slot, v) in total.iter_mut().zip(tail) {
            *slot += prob * v;
        }
    }
    total
}

/// Exact utility triple of the repeated game by full-tree enumeration.
/// Feasible only for a couple of repetitions of a tiny base game.
pub fn exact_repeated_utilities(
    game: &BayesianGame,
    mu: &RankTCce,
    repetitions: usize,
) -> [f64; 3] {
    let mut total = [0.0; 3];
    for t in 0..mu.rank() {
        let u = exact_component_utilities(
            game,
            mu.component(t),
            &History::new(),
            repetitions,
            repetitions,
        );
        for (slot, v) in total.iter_mut().zip(u) {
            *slot += v / mu.rank() as f64;
        }
    }
    total
}

/// Literal per-type swap regret of a trace: enumerate every source
/// strategy and replacement action straight from the definition, with
/// the day mixture probability `p_t(s) = (1/L)·Σ_ℓ Π_k w_{t,ℓ,k}(s(k))`
/// evaluated day by day.
pub fn swap_regret_bruteforce(trace: &DynamicsTrace, player: usize, k: usize) -> f64 {
    let n = trace.action_counts()[player];
    let k_count = trace.type_counts()[player];
    let space = n.pow(k_count as u32);
    let t_total = trace.params().total_days();
    let l = trace.params().thread_count();
    let mut total = 0.0;
    for s_idx in 0..space {
        let s = PureStrategy::from_index(s_idx, k_count, n);
        let mut best = f64::NEG_INFINITY;
        for j in 0..n {
            let mut delta = 0.0;
            for t in 1..=t_total {
                let mut p_t = 0.0;
                for ell in 1..=l {
                    p_t += trace.thread_strategy(t, player, ell).pure_prob(&s);
                }
                p_t /= l as f64;
                let r = trace.reward(t, player, k);
                delta += p_t * (r[j] - r[s.action(k)]);
            }
            best = best.max(delta);
        }
        total += best;
    }
    total
}
