//! Three-player margin-scoring gadget over a two-player Bayesian game,
//! its H-fold repetition, and the reduction extracting an approximate
//! BNE from a rank-T coarse correlated equilibrium of the repeated game.
//!
//! One gadget round: a referee player (the third player) picks a target
//! player, a type for it, and a suggested action; nature samples the
//! other player's type from the prior conditioned on the chosen one;
//! both players then act on their private types. The target is scored
//! by how much its own action beats the suggestion, the referee by the
//! negation, the non-target gets zero — so every payoff triple sums to
//! zero and renormalizes away any cross-repetition threats.
//!
//! The repeated game tree is never materialized: strategies are oracles
//! from history to per-gadget behavior, and every quantity is estimated
//! along sampled playouts. Each sampling role (referee, nature, the two
//! players) draws from its own generator stream, which makes the
//! information structure mechanical: resampling nature cannot disturb
//! an already-drawn referee or target action.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::dist::{DistError, FiniteDist};
use crate::eq_check::{
    check_bne_product, product_deviation_gains, BneMode, CheckError, EquilibriumReport,
};
use crate::game::{
    BayesianGame, BehaviorStrategy, GameError, PlayerStrategy, StrategyMixture, StrategyProfileDist,
};
use crate::regret::{RegretError, VovkState};
use crate::rng::SeedTree;

#[derive(Debug, Error)]
pub enum GadgetError {
    #[error("gadget needs a two-player base game, got {players} players")]
    NotTwoPlayers { players: usize },
    #[error("rank-T mixture needs at least one component")]
    EmptyCce,
    #[error("{what} index {index} out of range ({size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("need at least one repetition")]
    ZeroRepetitions,
    #[error("need at least one rollout")]
    ZeroRollouts,
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("oracle for {role} returned a strategy of the wrong shape")]
    OracleShape { role: String },
    #[error("referee chose type {type_index} of player {player}, which has zero prior mass")]
    ZeroMarginalType { player: usize, type_index: usize },
    #[error("observed outcome impossible under every mixture component")]
    PosteriorCollapse,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Regret(#[from] RegretError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// The referee's move: a target player, a type for it, and a suggested
/// action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KibitzerAction {
    pub target: usize,
    pub target_type: usize,
    pub suggestion: usize,
}

impl KibitzerAction {
    /// Size of the referee's action set: `K_1·n_1 + K_2·n_2`.
    pub fn count(game: &BayesianGame) -> usize {
        game.type_count(0) * game.action_count(0) + game.type_count(1) * game.action_count(1)
    }

    /// Flat index: target-0 block first, `(type, action)` row-major.
    pub fn to_index(&self, game: &BayesianGame) -> usize {
        let offset = if self.target == 0 {
            0
        } else {
            game.type_count(0) * game.action_count(0)
        };
        offset + self.target_type * game.action_count(self.target) + self.suggestion
    }

    pub fn from_index(game: &BayesianGame, index: usize) -> Result<Self, GadgetError> {
        let block0 = game.type_count(0) * game.action_count(0);
        let total = Self::count(game);
        if index >= total {
            return Err(GadgetError::IndexOutOfRange {
                what: "referee action",
                index,
                size: total,
            });
        }
        let (target, rest) = if index < block0 {
            (0, index)
        } else {
            (1, index - block0)
        };
        Ok(KibitzerAction {
            target,
            target_type: rest / game.action_count(target),
            suggestion: rest % game.action_count(target),
        })
    }
}

/// One resolved gadget round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GadgetOutcome {
    pub kibitzer: KibitzerAction,
    /// Realized types, in player order.
    pub types: [usize; 2],
    /// Played actions, in player order.
    pub actions: [usize; 2],
}

/// Sequence of outcomes identifying a node of the repeated game.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    outcomes: Vec<GadgetOutcome>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn outcomes(&self) -> &[GadgetOutcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn push(&mut self, outcome: GadgetOutcome) {
        self.outcomes.push(outcome);
    }
}

/// Strategy oracle of a regular player: per-gadget behavior given the
/// public history. Oracles never see the current round's types.
pub trait PlayerOracle: Send + Sync {
    fn behavior_at(&self, history: &History) -> BehaviorStrategy;
}

/// Strategy oracle of the referee: a distribution over its flat action
/// set given the public history.
pub trait KibitzerOracle: Send + Sync {
    fn dist_at(&self, history: &History) -> FiniteDist;
}

impl PlayerOracle for BehaviorStrategy {
    fn behavior_at(&self, _history: &History) -> BehaviorStrategy {
        self.clone()
    }
}

impl KibitzerOracle for FiniteDist {
    fn dist_at(&self, _history: &History) -> FiniteDist {
        self.clone()
    }
}

impl<F> PlayerOracle for F
where
    F: Fn(&History) -> BehaviorStrategy + Send + Sync,
{
    fn behavior_at(&self, history: &History) -> BehaviorStrategy {
        self(history)
    }
}

/// One product component of a rank-T mixture: independent oracles for
/// the two players and the referee.
pub struct CceComponent {
    players: [Box<dyn PlayerOracle>; 2],
    kibitzer: Box<dyn KibitzerOracle>,
}

impl CceComponent {
    pub fn new(
        p1: Box<dyn PlayerOracle>,
        p2: Box<dyn PlayerOracle>,
        kibitzer: Box<dyn KibitzerOracle>,
    ) -> Self {
        CceComponent {
            players: [p1, p2],
            kibitzer,
        }
    }

    /// History-independent component.
    pub fn constant(p1: BehaviorStrategy, p2: BehaviorStrategy, kibitzer: FiniteDist) -> Self {
        CceComponent {
            players: [Box::new(p1), Box::new(p2)],
            kibitzer: Box::new(kibitzer),
        }
    }

    pub fn player(&self, i: usize) -> &dyn PlayerOracle {
        self.players[i].as_ref()
    }

    pub fn kibitzer(&self) -> &dyn KibitzerOracle {
        self.kibitzer.as_ref()
    }
}

/// A uniform mixture of product components of the repeated game.
pub struct RankTCce {
    components: Vec<CceComponent>,
}

impl RankTCce {
    pub fn new(components: Vec<CceComponent>) -> Result<Self, GadgetError> {
        if components.is_empty() {
            return Err(GadgetError::EmptyCce);
        }
        Ok(RankTCce { components })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, t: usize) -> &CceComponent {
        &self.components[t]
    }

    /// History-independent mixture from per-component player strategies
    /// and an optional per-component referee distribution (uniform over
    /// feasible referee actions when absent).
    pub fn from_behavior_components(
        game: &BayesianGame,
        mixture: &StrategyMixture,
        kibitzer: Option<Vec<FiniteDist>>,
    ) -> Result<Self, GadgetError> {
        ensure_two_players(game)?;
        mixture.validate_for(game)?;
        let default_k = feasible_kibitzer_uniform(game)?;
        let ks = match kibitzer {
            Some(list) => {
                if list.len() != mixture.rank() {
                    return Err(GadgetError::OracleShape {
                        role: "referee".to_string(),
                    });
                }
                list
            }
            None => vec![default_k; mixture.rank()],
        };
        let components = mixture
            .components()
            .iter()
            .zip(ks)
            .map(|(c, k)| {
                if k.len() != KibitzerAction::count(game) {
                    return Err(GadgetError::OracleShape {
                        role: "referee".to_string(),
                    });
                }
                Ok(CceComponent::constant(c[0].clone(), c[1].clone(), k))
            })
            .collect::<Result<Vec<_>, _>>()?;
        RankTCce::new(components)
    }
}

fn ensure_two_players(game: &BayesianGame) -> Result<(), GadgetError> {
    if game.num_players() != 2 {
        return Err(GadgetError::NotTwoPlayers {
            players: game.num_players(),
        });
    }
    Ok(())
}

/// Uniform referee distribution over actions whose chosen type has
/// positive prior mass.
pub fn feasible_kibitzer_uniform(game: &BayesianGame) -> Result<FiniteDist, GadgetError> {
    ensure_two_players(game)?;
    let total = KibitzerAction::count(game);
    let mut weights = vec![0.0; total];
    for (idx, w) in weights.iter_mut().enumerate() {
        let a = KibitzerAction::from_index(game, idx)?;
        if game.prior_type_marginal(a.target, a.target_type) > 0.0 {
            *w = 1.0;
        }
    }
    Ok(FiniteDist::from_weights(weights)?)
}

/// Utility triple `(u_1, u_2, u_referee)` of one resolved gadget round:
/// the target is paid its margin over the suggestion, the referee the
/// negation, the other player zero. Each component lies in `[-1, 1]`.
pub fn gadget_utility(
    game: &BayesianGame,
    outcome: &GadgetOutcome,
) -> Result<[f64; 3], GadgetError> {
    ensure_two_players(game)?;
    let k = outcome.kibitzer;
    for i in 0..2 {
        if outcome.types[i] >= game.type_count(i) {
            return Err(GadgetError::IndexOutOfRange {
                what: "type",
                index: outcome.types[i],
                size: game.type_count(i),
            });
        }
        if outcome.actions[i] >= game.action_count(i) {
            return Err(GadgetError::IndexOutOfRange {
                what: "action",
                index: outcome.actions[i],
                size: game.action_count(i),
            });
        }
    }
    if k.target > 1 || k.suggestion >= game.action_count(k.target) {
        return Err(GadgetError::IndexOutOfRange {
            what: "referee suggestion",
            index: k.suggestion,
            size: game.action_count(k.target.min(1)),
        });
    }
    let mut suggested = outcome.actions;
    suggested[k.target] = k.suggestion;
    let played = game.utility(k.target, &outcome.types, &outcome.actions);
    let advised = game.utility(k.target, &outcome.types, &suggested);
    let mut u = [0.0; 3];
    u[k.target] = played - advised;
    u[2] = advised - played;
    Ok(u)
}

/// Per-role generator streams for one playout. Separate streams keep
/// one role's draws untouched by changes to another's distribution.
pub struct RoleRngs {
    pub kibitzer: ChaCha12Rng,
    pub nature: ChaCha12Rng,
    pub players: [ChaCha12Rng; 2],
}

impl RoleRngs {
    pub fn from_node(node: &SeedTree) -> Self {
        RoleRngs {
            kibitzer: node.child(0).rng(),
            nature: node.child(1).rng(),
            players: [node.child(2).rng(), node.child(3).rng()],
        }
    }
}

/// The three per-gadget strategies in force at some history.
#[derive(Debug, Clone)]
pub struct GadgetStrategies {
    pub players: [BehaviorStrategy; 2],
    pub kibitzer: FiniteDist,
}

fn query_component(
    game: &BayesianGame,
    component: &CceComponent,
    history: &History,
) -> Result<GadgetStrategies, GadgetError> {
    let mut players = Vec::with_capacity(2);
    for i in 0..2 {
        let b = component.player(i).behavior_at(history);
        if b.type_count() != game.type_count(i) || b.action_count() != game.action_count(i) {
            return Err(GadgetError::OracleShape {
                role: format!("player {i}"),
            });
        }
        players.push(b);
    }
    let kibitzer = component.kibitzer().dist_at(history);
    if kibitzer.len() != KibitzerAction::count(game) {
        return Err(GadgetError::OracleShape {
            role: "referee".to_string(),
        });
    }
    let p2 = players.pop().expect("two players");
    let p1 = players.pop().expect("two players");
    Ok(GadgetStrategies {
        players: [p1, p2],
        kibitzer,
    })
}

// Distribution of the non-target player's type under the prior
// conditioned on the target's type.
fn conditional_other_type(
    game: &BayesianGame,
    target: usize,
    target_type: usize,
) -> Result<FiniteDist, GadgetError> {
    let other = 1 - target;
    let rows = game
        .conditional_type_profiles(target, target_type)
        .map_err(|e| match e {
            GameError::ZeroProbabilityType { player, type_index } => {
                GadgetError::ZeroMarginalType { player, type_index }
            }
            other_err => GadgetError::Game(other_err),
        })?;
    let mut weights = vec![0.0; game.type_count(other)];
    for (types, w) in rows {
        weights[types[other]] += w;
    }
    Ok(FiniteDist::from_weights(weights)?)
}

/// Samples one gadget round. Draw order is fixed per role stream: the
/// referee's action, then nature's type, then each player's action. The
/// referee and the target never see the non-target type.
pub fn sample_gadget_outcome(
    game: &BayesianGame,
    strategies: &GadgetStrategies,
    rngs: &mut RoleRngs,
) -> Result<GadgetOutcome, GadgetError> {
    ensure_two_players(game)?;
    let k_index = strategies.kibitzer.sample(&mut rngs.kibitzer);
    let kibitzer = KibitzerAction::from_index(game, k_index)?;
    sample_gadget_outcome_with_kibitzer(game, strategies, kibitzer, rngs)
}

/// Samples the rest of a round after the referee's action is fixed.
pub fn sample_gadget_outcome_with_kibitzer(
    game: &BayesianGame,
    strategies: &GadgetStrategies,
    kibitzer: KibitzerAction,
    rngs: &mut RoleRngs,
) -> Result<GadgetOutcome, GadgetError> {
    let target = kibitzer.target;
    let other = 1 - target;
    let other_dist = conditional_other_type(game, target, kibitzer.target_type)?;
    let mut types = [0usize; 2];
    types[target] = kibitzer.target_type;
    types[other] = other_dist.sample(&mut rngs.nature);
    let mut actions = [0usize; 2];
    for i in 0..2 {
        actions[i] = strategies.players[i]
            .action_dist(types[i])
            .sample(&mut rngs.players[i]);
    }
    Ok(GadgetOutcome {
        kibitzer,
        types,
        actions,
    })
}

/// Monte Carlo estimate of the three players' utilities in the H-fold
/// repetition (per-round utilities weighted `1/H`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityEstimate {
    pub mean: [f64; 3],
    pub stderr: [f64; 3],
    pub rollouts: usize,
}

fn summarize(samples: &[[f64; 3]]) -> UtilityEstimate {
    let r = samples.len() as f64;
    let mut mean = [0.0; 3];
    for s in samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v / r;
        }
    }
    let mut stderr = [0.0; 3];
    if samples.len() > 1 {
        for s in samples {
            for ((e, v), m) in stderr.iter_mut().zip(s).zip(&mean) {
                *e += (v - m) * (v - m);
            }
        }
        for e in &mut stderr {
            *e = (*e / (r - 1.0)).sqrt() / r.sqrt();
        }
    }
    UtilityEstimate {
        mean,
        stderr,
        rollouts: samples.len(),
    }
}

/// Estimates the utility triple of `mu` in the `repetitions`-fold game
/// by sampled playouts; each rollout first draws a component uniformly.
pub fn rollout_utility(
    game: &BayesianGame,
    repetitions: usize,
    mu: &RankTCce,
    num_rollouts: usize,
    seed: u64,
) -> Result<UtilityEstimate, GadgetError> {
    ensure_two_players(game)?;
    if repetitions == 0 {
        return Err(GadgetError::ZeroRepetitions);
    }
    if num_rollouts == 0 {
        return Err(GadgetError::ZeroRollouts);
    }
    let root = SeedTree::new(seed);
    let mut samples = Vec::with_capacity(num_rollouts);
    for rollout in 0..num_rollouts {
        let node = root.child(rollout as u64);
        let t_star = node.child(0).rng().random_range(0..mu.rank());
        let mut rngs = RoleRngs::from_node(&node.child(1));
        let component = mu.component(t_star);
        let mut history = History::new();
        let mut total = [0.0; 3];
        for _ in 0..repetitions {
            let strategies = query_component(game, component, &history)?;
            let outcome = sample_gadget_outcome(game, &strategies, &mut rngs)?;
            let u = gadget_utility(game, &outcome)?;
            for (slot, v) in total.iter_mut().zip(u) {
                *slot += v / repetitions as f64;
            }
            history.push(outcome);
        }
        samples.push(total);
    }
    Ok(summarize(&samples))
}

/// Whether `repetitions ≥ ln(rank)/ε²`, the regime in which the
/// reduction's guarantees hold.
pub fn schedule_sufficient(repetitions: usize, rank: usize, eps: f64) -> bool {
    repetitions as f64 >= (rank as f64).ln() / (eps * eps)
}

fn schedule_warning(repetitions: usize, rank: usize, eps: f64) -> Option<String> {
    if schedule_sufficient(repetitions, rank, eps) {
        None
    } else {
        Some(format!(
            "repetitions {} below ln({})/{}^2 = {:.2}; guarantees lapse",
            repetitions,
            rank,
            eps,
            (rank as f64).ln() / (eps * eps)
        ))
    }
}

// Joint outcome distribution excluding the deviating player `i`:
// nested over referee action, the non-target type, and the other
// player's action: prob = x_K(a_K)·ρ(θ_other|τ)·x_{i'}(a_{i'}|θ_{i'}).
// The nature factor is shared by every component; it is kept so these
// vectors are genuine outcome distributions.
fn outcome_dist_minus_player(
    game: &BayesianGame,
    strategies: &GadgetStrategies,
    deviator: usize,
) -> Result<Vec<Vec<Vec<f64>>>, GadgetError> {
    let other = 1 - deviator;
    let total = KibitzerAction::count(game);
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let a_k = KibitzerAction::from_index(game, idx)?;
        let pk = strategies.kibitzer.prob(idx);
        let non_target = 1 - a_k.target;
        let nt_types = game.type_count(non_target);
        let mut per_type = vec![vec![0.0; game.action_count(other)]; nt_types];
        if pk > 0.0 {
            let other_type_dist = conditional_other_type(game, a_k.target, a_k.target_type)?;
            for (nt, row) in per_type.iter_mut().enumerate() {
                let p_type = other_type_dist.prob(nt);
                if p_type == 0.0 {
                    continue;
                }
                // the observed player's realized type under this pick
                let theta_other_player = if non_target == other {
                    nt
                } else {
                    a_k.target_type
                };
                let action_dist = strategies.players[other].action_dist(theta_other_player);
                for (a, slot) in row.iter_mut().enumerate() {
                    *slot = pk * p_type * action_dist.prob(a);
                }
            }
        }
        out.push(per_type);
    }
    Ok(out)
}

fn tv_nested(p: &[Vec<Vec<f64>>], q: &[Vec<Vec<f64>>]) -> f64 {
    let mut sum = 0.0;
    for (pa, qa) in p.iter().zip(q) {
        for (pt, qt) in pa.iter().zip(qa) {
            for (pv, qv) in pt.iter().zip(qt) {
                sum += (pv - qv).abs();
            }
        }
    }
    0.5 * sum
}

fn scale_nested(p: &mut [Vec<Vec<f64>>], s: f64) {
    for a in p.iter_mut() {
        for t in a.iter_mut() {
            for v in t.iter_mut() {
                *v *= s;
            }
        }
    }
}

fn add_scaled_nested(p: &mut [Vec<Vec<f64>>], q: &[Vec<Vec<f64>>], s: f64) {
    for (pa, qa) in p.iter_mut().zip(q) {
        for (pt, qt) in pa.iter_mut().zip(qa) {
            for (pv, qv) in pt.iter_mut().zip(qt) {
                *pv += s * qv;
            }
        }
    }
}

// Likelihood of the observed round, excluding the deviator's action.
fn likelihood_minus_player(
    game: &BayesianGame,
    strategies: &GadgetStrategies,
    deviator: usize,
    outcome: &GadgetOutcome,
) -> Result<f64, GadgetError> {
    let other = 1 - deviator;
    let a_k = outcome.kibitzer;
    let non_target = 1 - a_k.target;
    let other_type_dist = conditional_other_type(game, a_k.target, a_k.target_type)?;
    let lik = strategies.kibitzer.prob(a_k.to_index(game))
        * other_type_dist.prob(outcome.types[non_target])
        * strategies.players[other]
            .action_dist(outcome.types[other])
            .prob(outcome.actions[other]);
    Ok(lik)
}

// Best response of `deviator` against a posterior-weighted mixture of
// component strategies: per own type, the argmax action of the expected
// gadget utility. Only referee picks targeting the deviator contribute
// (its utility is zero otherwise), so the table enumerates suggestions,
// conditioned opponent types, and opponent actions.
fn best_response_strategy(
    game: &BayesianGame,
    deviator: usize,
    views: &[GadgetStrategies],
    posterior: &FiniteDist,
) -> Result<BehaviorStrategy, GadgetError> {
    let other = 1 - deviator;
    let k_count = game.type_count(deviator);
    let n = game.action_count(deviator);
    let mut table = vec![vec![0.0; n]; k_count];
    for (t, view) in views.iter().enumerate() {
        let q = posterior.prob(t);
        if q == 0.0 {
            continue;
        }
        for (k, row) in table.iter_mut().enumerate() {
            if game.prior_type_marginal(deviator, k) <= 0.0 {
                continue;
            }
            let cond = conditional_other_type(game, deviator, k)?;
            for suggestion in 0..n {
                let a_k = KibitzerAction {
                    target: deviator,
                    target_type: k,
                    suggestion,
                };
                let pk = view.kibitzer.prob(a_k.to_index(game));
                if pk == 0.0 {
                    continue;
                }
                for theta_other in 0..game.type_count(other) {
                    let pt = cond.prob(theta_other);
                    if pt == 0.0 {
                        continue;
                    }
                    let mut types = [0usize; 2];
                    types[deviator] = k;
                    types[other] = theta_other;
                    let opp = view.players[other].action_dist(theta_other);
                    for a_other in 0..game.action_count(other) {
                        let po = opp.prob(a_other);
                        if po == 0.0 {
                            continue;
                        }
                        let w = q * pk * pt * po;
                        for (own_action, slot) in row.iter_mut().enumerate() {
                            let mut actions = [0usize; 2];
                            actions[deviator] = own_action;
                            actions[other] = a_other;
                            let played = game.utility(deviator, &types, &actions);
                            actions[deviator] = suggestion;
                            let advised = game.utility(deviator, &types, &actions);
                            *slot += w * (played - advised);
                        }
                    }
                }
            }
        }
    }
    let dists = table
        .iter()
        .map(|row| {
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            FiniteDist::point_mass(best, n).expect("action index in range")
        })
        .collect();
    Ok(BehaviorStrategy::new(dists)?)
}

/// Monte Carlo estimate of a deviating player's utility when it tracks
/// the mixture component with an aggregating posterior and best-responds
/// to the predicted outcome distribution each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Average over rounds and rollouts of the total variation between
    /// the predicted and the true component's outcome distribution.
    pub mean_prediction_tv: f64,
    pub rollouts: usize,
}

/// Simulates the online deviation of player `deviator` against `mu`'s
/// other coordinates and estimates its utility.
pub fn deviation_rollout_player(
    game: &BayesianGame,
    repetitions: usize,
    mu: &RankTCce,
    deviator: usize,
    num_rollouts: usize,
    seed: u64,
) -> Result<DeviationEstimate, GadgetError> {
    ensure_two_players(game)?;
    if deviator > 1 {
        return Err(GadgetError::IndexOutOfRange {
            what: "player",
            index: deviator,
            size: 2,
        });
    }
    if repetitions == 0 {
        return Err(GadgetError::ZeroRepetitions);
    }
    if num_rollouts == 0 {
        return Err(GadgetError::ZeroRollouts);
    }
    let root = SeedTree::new(seed);
    let mut utilities = Vec::with_capacity(num_rollouts);
    let mut tv_total = 0.0;
    for rollout in 0..num_rollouts {
        let node = root.child(rollout as u64);
        let t_star = node.child(0).rng().random_range(0..mu.rank());
        let mut rngs = RoleRngs::from_node(&node.child(1));
        let mut vovk = VovkState::new(mu.rank())?;
        let mut history = History::new();
        let mut total = 0.0;
        for _ in 0..repetitions {
            let views: Vec<GadgetStrategies> = (0..mu.rank())
                .map(|t| query_component(game, mu.component(t), &history))
                .collect::<Result<_, _>>()?;
            let posterior = vovk.posterior().map_err(|e| match e {
                RegretError::AllExpertsEliminated => GadgetError::PosteriorCollapse,
                other => GadgetError::Regret(other),
            })?;

            // Prediction quality against the true component.
            let mut predicted = outcome_dist_minus_player(game, &views[0], deviator)?;
            scale_nested(&mut predicted, posterior.prob(0));
            for (t, view) in views.iter().enumerate().skip(1) {
                let q = posterior.prob(t);
                if q == 0.0 {
                    continue;
                }
                let d = outcome_dist_minus_player(game, view, deviator)?;
                add_scaled_nested(&mut predicted, &d, q);
            }
            let truth = outcome_dist_minus_player(game, &views[t_star], deviator)?;
            tv_total += tv_nested(&predicted, &truth) / repetitions as f64;

            // Deviator best-responds to the prediction; everyone else
            // follows the true component.
            let response = best_response_strategy(game, deviator, &views, &posterior)?;
            let truth_view = &views[t_star];
            let k_index = truth_view.kibitzer.sample(&mut rngs.kibitzer);
            let a_k = KibitzerAction::from_index(game, k_index)?;
            let mut strategies = truth_view.clone();
            strategies.players[deviator] = response;
            let outcome = sample_gadget_outcome_with_kibitzer(game, &strategies, a_k, &mut rngs)?;
            let u = gadget_utility(game, &outcome)?;
            total += u[deviator] / repetitions as f64;

            // Track the component from the public outcome.
            let liks: Vec<f64> = views
                .iter()
                .map(|view| likelihood_minus_player(game, view, deviator, &outcome))
                .collect::<Result<_, _>>()?;
            vovk.update(&liks).map_err(|e| match e {
                RegretError::AllExpertsEliminated => GadgetError::PosteriorCollapse,
                other => GadgetError::Regret(other),
            })?;
            history.push(outcome);
        }
        utilities.push(total);
    }
    let r = utilities.len() as f64;
    let mean = utilities.iter().sum::<f64>() / r;
    let stderr = if utilities.len() > 1 {
        (utilities
            .iter()
            .map(|u| (u - mean) * (u - mean))
            .sum::<f64>()
            / (r - 1.0))
            .sqrt()
            / r.sqrt()
    } else {
        0.0
    };
    Ok(DeviationEstimate {
        mean,
        stderr,
        mean_prediction_tv: tv_total / r,
        rollouts: utilities.len(),
    })
}

/// A posterior-weighted mixture of per-gadget behavior strategies — the
/// candidate strategy the reduction extracts for one player.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorStrategy {
    pub components: Vec<BehaviorStrategy>,
    pub weights: Vec<f64>,
}

impl PosteriorStrategy {
    /// Per-type action marginal of the mixture. For product profiles
    /// the equilibrium checks depend on a strategy only through these.
    pub fn behavior_marginal(&self) -> BehaviorStrategy {
        let k_count = self.components[0].type_count();
        let n = self.components[0].action_count();
        let dists = (0..k_count)
            .map(|k| {
                let mut acc = vec![0.0; n];
                for (component, &w) in self.components.iter().zip(&self.weights) {
                    for (slot, &p) in acc.iter_mut().zip(component.action_dist(k).probs()) {
                        *slot += w * p;
                    }
                }
                FiniteDist::from_weights(acc).expect("mixture of distributions")
            })
            .collect();
        BehaviorStrategy::new(dists).expect("non-empty")
    }
}

/// What the reduction produced.
#[derive(Debug)]
pub enum ReductionStatus {
    /// A profile passing the every-type check at `16ε` was found.
    Found {
        profile: [PosteriorStrategy; 2],
        report: EquilibriumReport,
    },
    /// The gadget budget ran out; the best candidate seen is reported.
    Exhausted {
        best_profile: Option<[PosteriorStrategy; 2]>,
        best_gain: f64,
    },
}

#[derive(Debug)]
pub struct ReductionOutcome {
    pub status: ReductionStatus,
    pub gadgets_visited: usize,
    pub schedule_warning: Option<String>,
}

/// Walks gadgets along playouts of the constructed referee deviation:
/// at each visited gadget the posterior over components induces a
/// candidate product profile, returned as soon as it passes the
/// every-type check at `16ε`; otherwise the referee plays the most
/// profitable `(player, type, suggestion)` and the playout continues.
pub fn reduction_extract_bne(
    game: &BayesianGame,
    repetitions: usize,
    mu: &RankTCce,
    eps: f64,
    budget: usize,
    seed: u64,
) -> Result<ReductionOutcome, GadgetError> {
    ensure_two_players(game)?;
    if repetitions == 0 {
        return Err(GadgetError::ZeroRepetitions);
    }
    if budget == 0 {
        return Err(GadgetError::ZeroBudget);
    }
    let warning = schedule_warning(repetitions, mu.rank(), eps);
    let root = SeedTree::new(seed);
    let mut visited = 0usize;
    let mut best_gain = f64::INFINITY;
    let mut best_profile: Option<[PosteriorStrategy; 2]> = None;
    let mut rollout = 0u64;
    'outer: loop {
        let node = root.child(rollout);
        rollout += 1;
        let t_star = node.child(0).rng().random_range(0..mu.rank());
        let mut rngs = RoleRngs::from_node(&node.child(1));
        let mut vovk = VovkState::new(mu.rank())?;
        let mut history = History::new();
        for _ in 0..repetitions {
            if visited >= budget {
                break 'outer;
            }
            visited += 1;
            let views: Vec<GadgetStrategies> = (0..mu.rank())
                .map(|t| query_component(game, mu.component(t), &history))
                .collect::<Result<_, _>>()?;
            let posterior = vovk.posterior().map_err(|e| match e {
                RegretError::AllExpertsEliminated => GadgetError::PosteriorCollapse,
                other => GadgetError::Regret(other),
            })?;
            let candidate = [0, 1].map(|i| PosteriorStrategy {
                components: views.iter().map(|v| v.players[i].clone()).collect(),
                weights: posterior.probs().to_vec(),
            });
            let profile = StrategyProfileDist::new(
                candidate
                    .iter()
                    .map(|p| PlayerStrategy::Behavior(p.behavior_marginal()))
                    .collect(),
            );
            let report = check_bne_product(game, &profile, 16.0 * eps, BneMode::EveryType)?;
            if report.satisfied {
                return Ok(ReductionOutcome {
                    status: ReductionStatus::Found {
                        profile: candidate,
                        report,
                    },
                    gadgets_visited: visited,
                    schedule_warning: warning,
                });
            }
            if report.worst_gain < best_gain {
                best_gain = report.worst_gain;
                best_profile = Some(candidate);
            }

            // Referee plays the most profitable deviation; play
            // continues under the true component.
            let a_k = most_profitable_kibitzer_action(game, &profile)?;
            let truth_view = &views[t_star];
            let outcome = sample_gadget_outcome_with_kibitzer(game, truth_view, a_k, &mut rngs)?;
            let liks: Vec<f64> = views
                .iter()
                .map(|view| likelihood_given_kibitzer(game, view, &outcome))
                .collect::<Result<_, _>>()?;
            vovk.update(&liks).map_err(|e| match e {
                RegretError::AllExpertsEliminated => GadgetError::PosteriorCollapse,
                other => GadgetError::Regret(other),
            })?;
            history.push(outcome);
        }
    }
    Ok(ReductionOutcome {
        status: ReductionStatus::Exhausted {
            best_profile,
            best_gain,
        },
        gadgets_visited: visited,
        schedule_warning: warning,
    })
}

// The referee action realizing the largest per-type deviation gain
// against a product profile; ties break to the lowest (player, type).
fn most_profitable_kibitzer_action(
    game: &BayesianGame,
    profile: &StrategyProfileDist,
) -> Result<KibitzerAction, GadgetError> {
    let gains = product_deviation_gains(game, profile)?;
    let mut best: Option<(f64, KibitzerAction)> = None;
    for (i, per_type) in gains.iter().enumerate() {
        for (k, cell) in per_type.iter().enumerate() {
            if let Some((gain, action)) = cell {
                let candidate = KibitzerAction {
                    target: i,
                    target_type: k,
                    suggestion: *action,
                };
                if best.as_ref().is_none_or(|(g, _)| *gain > *g) {
                    best = Some((*gain, candidate));
                }
            }
        }
    }
    best.map(|(_, a)| a).ok_or(GadgetError::PosteriorCollapse)
}

// Likelihood of the public outcome given the referee's action: the
// nature factor (shared by all components) times both players' action
// probabilities.
fn likelihood_given_kibitzer(
    game: &BayesianGame,
    view: &GadgetStrategies,
    outcome: &GadgetOutcome,
) -> Result<f64, GadgetError> {
    let a_k = outcome.kibitzer;
    let non_target = 1 - a_k.target;
    let other_type_dist = conditional_other_type(game, a_k.target, a_k.target_type)?;
    let mut lik = other_type_dist.prob(outcome.types[non_target]);
    for i in 0..2 {
        lik *= view.players[i]
            .action_dist(outcome.types[i])
            .prob(outcome.actions[i]);
    }
    Ok(lik)
}

/// Estimate of the referee's utility under the constructed deviation,
/// with the players' means carried along so playout-level zero-sum
/// stays visible.
#[derive(Debug, Clone, PartialEq)]
pub struct KibitzerDeviationEstimate {
    pub utilities: UtilityEstimate,
    pub schedule_warning: Option<String>,
}

/// Plays the referee deviation of the reduction (always choosing the
/// most profitable suggestion, never returning) and estimates the
/// utility triple.
pub fn kibitzer_deviation_utility(
    game: &BayesianGame,
    repetitions: usize,
    mu: &RankTCce,
    eps: f64,
    num_rollouts: usize,
    seed: u64,
) -> Result<KibitzerDeviationEstimate, GadgetError> {
    ensure_two_players(game)?;
    if repetitions == 0 {
        return Err(GadgetError::ZeroRepetitions);
    }
    if num_rollouts == 0 {
        return Err(GadgetError::ZeroRollouts);
    }
    let warning = schedule_warning(repetitions, mu.rank(), eps);
    let root = SeedTree::new(seed);
    let mut samples = Vec::with_capacity(num_rollouts);
    for rollout in 0..num_rollouts {
        let node = root.child(rollout as u64);
        let t_star = node.child(0).rng().random_range(0..mu.rank());
        let mut rngs = RoleRngs::from_node(&node.child(1));
        let mut vovk = VovkState::new(mu.rank())?;
        let mut history = History::new();
        let mut total = [0.0; 3];
        for _ in 0..repetitions {
            let views: Vec<GadgetStrategies> = (0..mu.rank())
                .map(|t| query_component(game, mu.component(t), &history))
                .collect::<Result<_, _>>()?;
            let posterior = vovk.posterior().map_err(|e| match e {
                RegretError::AllExpertsEliminated => GadgetError::PosteriorCollapse,
                other => GadgetError::Regret(other),
            })?;
            let profile = StrategyProfileDist::new(
                [0, 1]
                    .map(|i| {
                        let p = PosteriorStrategy {
                            components: views.iter().map(|v| v.players[i].clone()).collect(),
                            weights: posterior.probs().to_vec(),
                        };
                        PlayerStrategy::Behavior(p.behavior_marginal())
                    })
                    .to_vec(),
            );
            let a_k = most_profitable_kibitzer_action(game, &profile)?;
            let truth_view = &views[t_star];
            let outcome = sample_gadget_outcome_with_kibitzer(game, truth_view, a_k, &mut rngs)?;
            let u = gadget_utility(game, &outcome)?;
            for (slot, v) in total.iter_mut().zip(u) {
                *slot += v / repetitions as f64;
            }
            let liks: Vec<f64> = views
                .iter()
                .map(|view| likelihood_given_kibitzer(game, view, &outcome))
                .collect::<Result<_, _>>()?;
            vovk.update(&liks).map_err(|e| match e {
                RegretError::AllExpertsEliminated => GadgetError::PosteriorCollapse,
                other => GadgetError::Regret(other),
            })?;
            history.push(outcome);
        }
        samples.push(total);
    }
    Ok(KibitzerDeviationEstimate {
        utilities: summarize(&samples),
        schedule_warning: warning,
    })
}
