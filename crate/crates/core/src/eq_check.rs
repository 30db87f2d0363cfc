//! Equilibrium verifiers for Bayesian games.
//!
//! The checks work on uniform mixtures of product profiles — the exact
//! form produced by uncoupled dynamics (rank-T distributions). The swap
//! maximization decouples per source strategy: the best replacement for
//! source `s` at type `k` is the argmax of the component-weighted reward
//! sum, so the exact optimum needs one pass over the `n^K` source space.
//! That pass is capped at [`SCALE_CAP`]; larger games are a hard error,
//! never a silent approximation.
//!
//! Also here: an executable counterexample showing that replacing a
//! rank-2 correlated equilibrium by its per-type behavior marginals can
//! create a near-maximal swap gain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{
    conditional_reward_vector, expected_utility, BayesianGame, BehaviorStrategy, GameError,
    PlayerStrategy, PureStrategy, StrategyMixture, StrategyProfileDist,
};

/// Hard cap on enumerated pure strategies per player.
pub const SCALE_CAP: usize = 4096;

/// Tolerance built into every satisfaction decision.
pub const GAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("pure-strategy space of size {size} exceeds the enumeration cap {cap}")]
    ScaleCapExceeded { size: usize, cap: usize },
    #[error("player {player} out of range ({count} players)")]
    PlayerOutOfRange { player: usize, count: usize },
    #[error("type {type_index} out of range for player {player}")]
    TypeOutOfRange { player: usize, type_index: usize },
    #[error("demo needs at least 4 types, got {0}")]
    DemoTooSmall(usize),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Which deviation-gain aggregation a check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BneMode {
    /// Gain bounded at every positive-probability type.
    EveryType,
    /// Gain bounded on average over the type prior.
    ExAnte,
}

/// Where a violation was found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scope", content = "type_index", rename_all = "kebab-case")]
pub enum TypeScope {
    Type(usize),
    ExAnte,
}

/// The most profitable deviation found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub player: usize,
    #[serde(flatten)]
    pub scope: TypeScope,
    pub deviation: String,
}

/// Outcome of an equilibrium check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub satisfied: bool,
    pub epsilon: f64,
    pub worst_gain: f64,
    pub witness: Option<Witness>,
}

impl EquilibriumReport {
    fn build(epsilon: f64, worst_gain: f64, witness: Witness) -> Self {
        let satisfied = worst_gain <= epsilon + GAIN_SLACK;
        EquilibriumReport {
            satisfied,
            epsilon,
            worst_gain,
            witness: if satisfied { None } else { Some(witness) },
        }
    }
}

fn checked_strategy_space(game: &BayesianGame, player: usize) -> Result<usize, CheckError> {
    let size = game
        .pure_strategy_count(player)
        .map_err(|_| CheckError::ScaleCapExceeded {
            size: usize::MAX,
            cap: SCALE_CAP,
        })?;
    if size > SCALE_CAP {
        return Err(CheckError::ScaleCapExceeded {
            size,
            cap: SCALE_CAP,
        });
    }
    Ok(size)
}

/// Exact maximal per-type swap gain of `player` at type `k` against the
/// mixture `mu`, together with a description of the maximizing swap.
///
/// For each component `c`, the opponents induce a reward vector `r_c`;
/// a source strategy `s` is rebound to `argmax_j Σ_c q_c(s)·r_c(j)`, and
/// the gain sums the per-source improvements over the played actions.
pub fn best_swap_gain(
    mu: &StrategyMixture,
    game: &BayesianGame,
    player: usize,
    k: usize,
) -> Result<(f64, String), CheckError> {
    mu.validate_for(game)?;
    if player >= game.num_players() {
        return Err(CheckError::PlayerOutOfRange {
            player,
            count: game.num_players(),
        });
    }
    if k >= game.type_count(player) {
        return Err(CheckError::TypeOutOfRange {
            player,
            type_index: k,
        });
    }
    let space = checked_strategy_space(game, player)?;
    let k_count = game.type_count(player);
    let n = game.action_count(player);

    // Reward vector against each component's opponents.
    let rewards: Vec<Vec<f64>> = mu
        .components()
        .iter()
        .map(|component| {
            let profile = StrategyProfileDist::new(
                component
                    .iter()
                    .map(|b| PlayerStrategy::Behavior(b.clone()))
                    .collect(),
            );
            conditional_reward_vector(game, player, k, &profile)
        })
        .collect::<Result<_, _>>()?;

    let inv_c = 1.0 / mu.rank() as f64;
    let mut total_gain = 0.0;
    let mut top: Option<(f64, usize, usize)> = None; // (contribution, source, target)
    for s_idx in 0..space {
        let source = PureStrategy::from_index(s_idx, k_count, n);
        let mut scores = vec![0.0; n];
        for (component, r) in mu.components().iter().zip(&rewards) {
            let w = component[player].pure_prob(&source);
            if w == 0.0 {
                continue;
            }
            for (slot, &rj) in scores.iter_mut().zip(r) {
                *slot += w * rj;
            }
        }
        let mut best = 0usize;
        for (j, &v) in scores.iter().enumerate() {
            if v > scores[best] {
                best = j;
            }
        }
        let contribution = scores[best] - scores[source.action(k)];
        total_gain += contribution;
        if top.is_none_or(|(c, _, _)| contribution > c) {
            top = Some((contribution, s_idx, best));
        }
    }
    let gain = total_gain * inv_c;
    let description = match top {
        Some((contribution, s_idx, target)) if contribution > 0.0 => {
            let source = PureStrategy::from_index(s_idx, k_count, n);
            format!(
                "rebind source strategy {:?} to action {} at type {} (top contribution {:.6})",
                source.choices(),
                target,
                k,
                contribution * inv_c
            )
        }
        _ => "no profitable swap".to_string(),
    };
    Ok((gain, description))
}

/// Swap gain and the describing deviation of one `(player, type)` cell.
pub type TypeGain = Option<(f64, String)>;

// Per-(player, type) swap gains for all positive-prior types.
fn all_type_gains(
    mu: &StrategyMixture,
    game: &BayesianGame,
) -> Result<Vec<Vec<TypeGain>>, CheckError> {
    let tasks: Vec<(usize, usize)> = (0..game.num_players())
        .flat_map(|i| (0..game.type_count(i)).map(move |k| (i, k)))
        .collect();
    type CellResult = ((usize, usize), Option<Result<(f64, String), CheckError>>);
    let results: Vec<CellResult> = tasks
        .par_iter()
        .map(|&(i, k)| {
            if game.prior_type_marginal(i, k) > 0.0 {
                ((i, k), Some(best_swap_gain(mu, game, i, k)))
            } else {
                ((i, k), None)
            }
        })
        .collect();
    let mut out: Vec<Vec<TypeGain>> = (0..game.num_players())
        .map(|i| vec![None; game.type_count(i)])
        .collect();
    for ((i, k), r) in results {
        out[i][k] = r.transpose()?;
    }
    Ok(out)
}

/// Checks the every-type notion: the swap gain must be at most `eps` for
/// every player at every positive-probability type.
pub fn check_every_type_nfce(
    mu: &StrategyMixture,
    game: &BayesianGame,
    eps: f64,
) -> Result<EquilibriumReport, CheckError> {
    let gains = all_type_gains(mu, game)?;
    let mut worst = 0.0;
    let mut witness = Witness {
        player: 0,
        scope: TypeScope::Type(0),
        deviation: "no profitable swap".to_string(),
    };
    for (i, per_type) in gains.iter().enumerate() {
        for (k, cell) in per_type.iter().enumerate() {
            if let Some((gain, desc)) = cell {
                if *gain > worst {
                    worst = *gain;
                    witness = Witness {
                        player: i,
                        scope: TypeScope::Type(k),
                        deviation: desc.clone(),
                    };
                }
            }
        }
    }
    Ok(EquilibriumReport::build(eps, worst, witness))
}

/// Checks the ex-ante notion: the prior-averaged swap gain must be at
/// most `eps` for every player. The maximizing swap decouples per
/// `(source, type)` cell, so the ex-ante optimum is the prior-weighted
/// sum of the per-type optima.
pub fn check_ex_ante_nfce(
    mu: &StrategyMixture,
    game: &BayesianGame,
    eps: f64,
) -> Result<EquilibriumReport, CheckError> {
    let gains = all_type_gains(mu, game)?;
    let mut worst = 0.0;
    let mut witness = Witness {
        player: 0,
        scope: TypeScope::ExAnte,
        deviation: "no profitable swap".to_string(),
    };
    for (i, per_type) in gains.iter().enumerate() {
        let mut total = 0.0;
        let mut top: Option<(f64, &str)> = None;
        for (k, cell) in per_type.iter().enumerate() {
            if let Some((gain, desc)) = cell {
                let weighted = game.prior_type_marginal(i, k) * gain;
                total += weighted;
                if top.is_none_or(|(w, _)| weighted > w) {
                    top = Some((weighted, desc));
                }
            }
        }
        if total > worst {
            worst = total;
            witness = Witness {
                player: i,
                scope: TypeScope::ExAnte,
                deviation: top.map_or("no profitable swap".to_string(), |(_, d)| d.to_string()),
            };
        }
    }
    Ok(EquilibriumReport::build(eps, worst, witness))
}

/// Per-(player, type) best fixed deviation against a product profile:
/// `(gain, best_action)`, or `None` for zero-prior types.
pub type DeviationGain = Option<(f64, usize)>;

pub fn product_deviation_gains(
    game: &BayesianGame,
    profile: &StrategyProfileDist,
) -> Result<Vec<Vec<DeviationGain>>, CheckError> {
    profile.validate_for(game)?;
    let mut out = Vec::with_capacity(game.num_players());
    for i in 0..game.num_players() {
        let k_count = game.type_count(i);
        let n = game.action_count(i);
        let mut per_type = Vec::with_capacity(k_count);
        for k in 0..k_count {
            if game.prior_type_marginal(i, k) <= 0.0 {
                per_type.push(None);
                continue;
            }
            let r = conditional_reward_vector(game, i, k, profile)?;
            let marginal = profile.player(i).action_marginal(k_count, n, k);
            let played: f64 = marginal.probs().iter().zip(&r).map(|(w, v)| w * v).sum();
            let mut best = 0usize;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            per_type.push(Some((r[best] - played, best)));
        }
        out.push(per_type);
    }
    Ok(out)
}

/// Equilibrium check specialized to product profiles, where the best
/// swap degenerates to the best fixed per-type deviation.
pub fn check_bne_product(
    game: &BayesianGame,
    profile: &StrategyProfileDist,
    eps: f64,
    mode: BneMode,
) -> Result<EquilibriumReport, CheckError> {
    let gains = product_deviation_gains(game, profile)?;
    let mut worst = 0.0;
    let mut witness = Witness {
        player: 0,
        scope: match mode {
            BneMode::EveryType => TypeScope::Type(0),
            BneMode::ExAnte => TypeScope::ExAnte,
        },
        deviation: "no profitable deviation".to_string(),
    };
    match mode {
        BneMode::EveryType => {
            for (i, per_type) in gains.iter().enumerate() {
                for (k, cell) in per_type.iter().enumerate() {
                    if let Some((gain, action)) = cell {
                        if *gain > worst {
                            worst = *gain;
                            witness = Witness {
                                player: i,
                                scope: TypeScope::Type(k),
                                deviation: format!("play action {action} at type {k}"),
                            };
                        }
                    }
                }
            }
        }
        BneMode::ExAnte => {
            for (i, per_type) in gains.iter().enumerate() {
                let mut total = 0.0;
                let mut best_desc = "no profitable deviation".to_string();
                let mut best_weighted = f64::NEG_INFINITY;
                for (k, cell) in per_type.iter().enumerate() {
                    if let Some((gain, action)) = cell {
                        let weighted = game.prior_type_marginal(i, k) * gain;
                        total += weighted;
                        if weighted > best_weighted {
                            best_weighted = weighted;
                            best_desc = format!("play action {action} at type {k}");
                        }
                    }
                }
                if total > worst {
                    worst = total;
                    witness = Witness {
                        player: i,
                        scope: TypeScope::ExAnte,
                        deviation: best_desc,
                    };
                }
            }
        }
    }
    Ok(EquilibriumReport::build(eps, worst, witness))
}

/// Expected utility vector under a uniform mixture of product profiles.
pub fn mixture_expected_utility(
    game: &BayesianGame,
    mu: &StrategyMixture,
) -> Result<Vec<f64>, CheckError> {
    mu.validate_for(game)?;
    let mut out = vec![0.0; game.num_players()];
    for component in mu.components() {
        let profile = StrategyProfileDist::new(
            component
                .iter()
                .map(|b| PlayerStrategy::Behavior(b.clone()))
                .collect(),
        );
        let u = expected_utility(game, &profile)?;
        for (slot, v) in out.iter_mut().zip(u) {
            *slot += v;
        }
    }
    let inv = 1.0 / mu.rank() as f64;
    for slot in &mut out {
        *slot *= inv;
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Rank-2 behaviorization counterexample
// ---------------------------------------------------------------------

/// Result of [`behaviorization_demo`]: swap gains before and after
/// replacing the rank-2 correlated equilibrium by per-type behavior
/// marginals, on the demo game's native payoff scale (`{-2, 0, 1}`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorizationDemo {
    /// Best swap gain against the rank-2 correlated equilibrium (zero).
    pub ce_gain: f64,
    /// Gain of the window swap against the behaviorized mixture.
    pub behaviorized_gain: f64,
}

// Payoffs of the acting player: rows are its actions 0..3, columns the
// observer's actions 0..1. Identical for every type.
const DEMO_PAYOFF: [[f64; 2]; 4] = [[0.0, 0.0], [0.0, 0.0], [1.0, -2.0], [-2.0, 1.0]];

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

fn binomial_pmf(n: usize, p: f64, lf: &[f64]) -> Vec<f64> {
    let q = 1.0 - p;
    (0..=n)
        .map(|v| (lf[n] - lf[v] - lf[n - v] + v as f64 * p.ln() + (n - v) as f64 * q.ln()).exp())
        .collect()
}

/// Window half-width of the demo swap: `√n·ln n`, capped at `n/6` so the
/// two windows stay disjoint at small `n` (the cap is inactive once `n`
/// reaches a few thousand).
pub fn demo_window_half_width(n: usize) -> f64 {
    let nf = n as f64;
    (nf.sqrt() * nf.ln()).min(nf / 6.0)
}

/// Executable demonstration that behaviorizing a rank-2 correlated
/// equilibrium can create a large swap gain.
///
/// One player has `n` types and four actions; the other a single type,
/// two actions, and constant utility. The rank-2 mixture recommends the
/// all-0 or all-1 strategy with weights that make every swap worthless
/// (`ce_gain = 0`). After behaviorizing, the count of 1s in a
/// recommendation reveals the mixture component, and the window swap —
/// rebinding recommendations with counts near `n/3` (resp. `2n/3`) to
/// the action that exploits the revealed observer action — gains almost
/// the full payoff. Both gains are computed exactly from binomial mass
/// functions.
pub fn behaviorization_demo(n: usize) -> Result<BehaviorizationDemo, CheckError> {
    if n < 4 {
        return Err(CheckError::DemoTooSmall(n));
    }

    // Correlated case: the two signals are the all-0 and all-1
    // strategies. Conditioned on a signal, the component posterior fixes
    // the observer's action distribution, and keeping the recommendation
    // weakly dominates every replacement.
    let mut ce_gain: f64 = 0.0;
    for (signal_prob, posterior_first) in [
        (0.5, 1.0 / 3.0), // all-0 signal
        (0.5, 2.0 / 3.0), // all-1 signal
    ] {
        // component 1's observer plays 0, component 2's plays 1
        let observer0 = posterior_first;
        let mut best = 0.0f64; // keeping the signal pays 0
        for row in DEMO_PAYOFF {
            let eu = observer0 * row[0] + (1.0 - observer0) * row[1];
            best = best.max(eu);
        }
        ce_gain += signal_prob * best;
    }

    // Behaviorized case: recommendations become i.i.d. per type, so the
    // count of 1s concentrates near 2n/3 under component 1 and near n/3
    // under component 2.
    let w = demo_window_half_width(n);
    let lf = ln_factorials(n);
    let pmf_first = binomial_pmf(n, 2.0 / 3.0, &lf); // observer plays 0
    let pmf_second = binomial_pmf(n, 1.0 / 3.0, &lf); // observer plays 1
    let low = n as f64 / 3.0;
    let high = 2.0 * n as f64 / 3.0;
    let mut behaviorized_gain = 0.0;
    for v in 0..=n {
        let vf = v as f64;
        let in_low = vf > low - w && vf < low + w;
        let in_high = vf > high - w && vf < high + w;
        // counts near n/3 reveal component 2 (observer plays 1), where
        // action 3 pays 1; counts near 2n/3 reveal component 1, where
        // action 2 pays 1.
        let target = match (in_low, in_high) {
            (true, false) => Some(3usize),
            (false, true) => Some(2usize),
            _ => None,
        };
        if let Some(a) = target {
            behaviorized_gain +=
                0.5 * pmf_first[v] * DEMO_PAYOFF[a][0] + 0.5 * pmf_second[v] * DEMO_PAYOFF[a][1];
        }
    }

    Ok(BehaviorizationDemo {
        ce_gain,
        behaviorized_gain,
    })
}

/// The demo game rescaled into `[0, 1]` utilities (`u ↦ (u+2)/3`), with
/// the acting player first (`n` types, 4 actions) and the single-type
/// observer second. Gains measured here are one third of the demo's.
pub fn behaviorization_demo_game(n: usize) -> Result<BayesianGame, CheckError> {
    if n < 4 {
        return Err(CheckError::DemoTooSmall(n));
    }
    let prior = vec![1.0 / n as f64; n];
    let mut actor = vec![0.0; n * 8];
    for theta in 0..n {
        for a in 0..4 {
            for b in 0..2 {
                actor[theta * 8 + a * 2 + b] = (DEMO_PAYOFF[a][b] + 2.0) / 3.0;
            }
        }
    }
    let observer = vec![2.0 / 3.0; n * 8];
    Ok(BayesianGame::from_tables(
        vec![n, 1],
        vec![4, 2],
        prior,
        vec![actor, observer],
    )?)
}

/// The rank-2 correlated equilibrium of the demo game, expanded to a
/// uniform rank-6 mixture of point-mass products (the 1/3 and 2/3
/// weights become repeated components).
pub fn behaviorization_demo_correlated(n: usize) -> Result<StrategyMixture, CheckError> {
    if n < 4 {
        return Err(CheckError::DemoTooSmall(n));
    }
    let all = |a: usize| {
        BehaviorStrategy::from_pure(&PureStrategy::new(vec![a; n], 4).expect("action"), 4)
    };
    let observer =
        |b: usize| BehaviorStrategy::from_pure(&PureStrategy::new(vec![b], 2).expect("action"), 2);
    let components = vec![
        vec![all(0), observer(0)],
        vec![all(1), observer(0)],
        vec![all(1), observer(0)],
        vec![all(0), observer(1)],
        vec![all(0), observer(1)],
        vec![all(1), observer(1)],
    ];
    Ok(StrategyMixture::new(components)?)
}

/// The behaviorized (rank-2) counterpart: per-type i.i.d. marginals.
pub fn behaviorization_demo_behaviorized(n: usize) -> Result<StrategyMixture, CheckError> {
    if n < 4 {
        return Err(CheckError::DemoTooSmall(n));
    }
    let iid = |p1: f64| {
        let per_type =
            crate::dist::FiniteDist::new(vec![1.0 - p1, p1, 0.0, 0.0]).expect("valid marginal");
        BehaviorStrategy::new(vec![per_type; n]).expect("non-empty")
    };
    let observer =
        |b: usize| BehaviorStrategy::from_pure(&PureStrategy::new(vec![b], 2).expect("action"), 2);
    let components = vec![
        vec![iid(2.0 / 3.0), observer(0)],
        vec![iid(1.0 / 3.0), observer(1)],
    ];
    Ok(StrategyMixture::new(components)?)
}
