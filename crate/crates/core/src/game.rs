//! Bayesian games with exact and sampled reward evaluation.
//!
//! A game holds per-player type counts `K_i`, action counts `n_i`, a
//! prior over type profiles, and per-player utility tables with values
//! in `[0, 1]`. Utility tables are flat row-major over `(types, actions)`
//! with the last index fastest, matching the file formats.
//!
//! Games are immutable after validation; every evaluation function here
//! is pure, so callers may fan out over `(player, type)` pairs freely.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{self, coords_of_into, domain_size, DistError, FiniteDist};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("game needs at least one player")]
    NoPlayers,
    #[error("type/action lists disagree: {type_players} vs {action_players} players")]
    PlayerCountMismatch {
        type_players: usize,
        action_players: usize,
    },
    #[error("player {player} has an empty type or action set")]
    EmptyDomain { player: usize },
    #[error("prior has {actual} entries, expected {expected}")]
    PriorSizeMismatch { expected: usize, actual: usize },
    #[error("invalid prior: {0}")]
    Prior(DistError),
    #[error("expected {expected} utility tables, found {actual}")]
    UtilityTableCount { expected: usize, actual: usize },
    #[error("utility table of player {player} has {actual} entries, expected {expected}")]
    UtilityTableSize {
        player: usize,
        expected: usize,
        actual: usize,
    },
    #[error("utility {value} of player {player} at flat index {index} is outside [0, 1]")]
    UtilityOutOfRange {
        player: usize,
        index: usize,
        value: f64,
    },
    #[error("player index {player} out of range ({count} players)")]
    PlayerOutOfRange { player: usize, count: usize },
    #[error("type {type_index} of player {player} out of range")]
    TypeOutOfRange { player: usize, type_index: usize },
    #[error("type {type_index} of player {player} has zero prior probability")]
    ZeroProbabilityType { player: usize, type_index: usize },
    #[error("strategy of player {player} does not match the game shape")]
    StrategyShapeMismatch { player: usize },
    #[error("profile has {actual} entries for a {expected}-player game")]
    ProfileSizeMismatch { expected: usize, actual: usize },
    #[error("action {action} of player {player} out of range")]
    ActionOutOfRange { player: usize, action: usize },
    #[error("sample count must be at least 1")]
    ZeroSampleCount,
    #[error("pure-strategy space of player {player} overflows usize")]
    StrategySpaceOverflow { player: usize },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// An `m`-player Bayesian game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesianGame {
    type_counts: Vec<usize>,
    action_counts: Vec<usize>,
    prior: FiniteDist,
    utilities: Vec<Vec<f64>>,
}

impl BayesianGame {
    /// Validates and builds a game; reports the first violation found.
    pub fn new(
        type_counts: Vec<usize>,
        action_counts: Vec<usize>,
        prior: FiniteDist,
        utilities: Vec<Vec<f64>>,
    ) -> Result<Self, GameError> {
        if type_counts.is_empty() {
            return Err(GameError::NoPlayers);
        }
        if type_counts.len() != action_counts.len() {
            return Err(GameError::PlayerCountMismatch {
                type_players: type_counts.len(),
                action_players: action_counts.len(),
            });
        }
        for (player, (&k, &n)) in type_counts.iter().zip(&action_counts).enumerate() {
            if k == 0 || n == 0 {
                return Err(GameError::EmptyDomain { player });
            }
        }
        let theta_size = domain_size(&type_counts);
        if prior.len() != theta_size {
            return Err(GameError::PriorSizeMismatch {
                expected: theta_size,
                actual: prior.len(),
            });
        }
        if utilities.len() != type_counts.len() {
            return Err(GameError::UtilityTableCount {
                expected: type_counts.len(),
                actual: utilities.len(),
            });
        }
        let table_size = theta_size * domain_size(&action_counts);
        for (player, table) in utilities.iter().enumerate() {
            if table.len() != table_size {
                return Err(GameError::UtilityTableSize {
                    player,
                    expected: table_size,
                    actual: table.len(),
                });
            }
            for (index, &value) in table.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(GameError::UtilityOutOfRange {
                        player,
                        index,
                        value,
                    });
                }
            }
        }
        Ok(BayesianGame {
            type_counts,
            action_counts,
            prior,
            utilities,
        })
    }

    /// Builds a game from raw tables, validating the prior as well.
    pub fn from_tables(
        type_counts: Vec<usize>,
        action_counts: Vec<usize>,
        prior: Vec<f64>,
        utilities: Vec<Vec<f64>>,
    ) -> Result<Self, GameError> {
        let prior = FiniteDist::new(prior).map_err(GameError::Prior)?;
        Self::new(type_counts, action_counts, prior, utilities)
    }

    /// A game with full-support random prior and i.i.d. uniform payoffs.
    pub fn random<R: Rng + ?Sized>(
        type_counts: &[usize],
        action_counts: &[usize],
        rng: &mut R,
    ) -> Self {
        let theta_size = domain_size(type_counts);
        let weights: Vec<f64> = (0..theta_size)
            .map(|_| rng.random_range(0.05..1.0))
            .collect();
        let prior = FiniteDist::from_weights(weights).expect("positive weights");
        let table_size = theta_size * domain_size(action_counts);
        let utilities = (0..type_counts.len())
            .map(|_| (0..table_size).map(|_| rng.random::<f64>()).collect())
            .collect();
        BayesianGame::new(
            type_counts.to_vec(),
            action_counts.to_vec(),
            prior,
            utilities,
        )
        .expect("randomly generated tables are valid")
    }

    pub fn num_players(&self) -> usize {
        self.type_counts.len()
    }

    pub fn type_counts(&self) -> &[usize] {
        &self.type_counts
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn type_count(&self, player: usize) -> usize {
        self.type_counts[player]
    }

    pub fn action_count(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    pub fn prior(&self) -> &FiniteDist {
        &self.prior
    }

    pub fn utility_table(&self, player: usize) -> &[f64] {
        &self.utilities[player]
    }

    /// Payoff of `player` for a full type profile and action profile.
    pub fn utility(&self, player: usize, types: &[usize], actions: &[usize]) -> f64 {
        let theta = dist::flat_index(&self.type_counts, types);
        let act = dist::flat_index(&self.action_counts, actions);
        self.utilities[player][theta * domain_size(&self.action_counts) + act]
    }

    /// Prior probability that `player` has type `k`.
    pub fn prior_type_marginal(&self, player: usize, k: usize) -> f64 {
        let mut types = vec![0usize; self.num_players()];
        let mut total = 0.0;
        for flat in 0..self.prior.len() {
            coords_of_into(&self.type_counts, flat, &mut types);
            if types[player] == k {
                total += self.prior.prob(flat);
            }
        }
        total
    }

    /// Enumerates full type profiles consistent with `player` having type
    /// `k`, weighted by the prior conditioned on that event.
    pub fn conditional_type_profiles(
        &self,
        player: usize,
        k: usize,
    ) -> Result<Vec<(Vec<usize>, f64)>, GameError> {
        if player >= self.num_players() {
            return Err(GameError::PlayerOutOfRange {
                player,
                count: self.num_players(),
            });
        }
        if k >= self.type_counts[player] {
            return Err(GameError::TypeOutOfRange {
                player,
                type_index: k,
            });
        }
        let mut rows = Vec::new();
        let mut types = vec![0usize; self.num_players()];
        let mut mass = 0.0;
        for flat in 0..self.prior.len() {
            coords_of_into(&self.type_counts, flat, &mut types);
            if types[player] == k {
                let p = self.prior.prob(flat);
                mass += p;
                if p > 0.0 {
                    rows.push((types.clone(), p));
                }
            }
        }
        if mass <= 0.0 {
            return Err(GameError::ZeroProbabilityType {
                player,
                type_index: k,
            });
        }
        for row in &mut rows {
            row.1 /= mass;
        }
        Ok(rows)
    }

    /// Number of pure strategies `n_i^{K_i}` of a player.
    pub fn pure_strategy_count(&self, player: usize) -> Result<usize, GameError> {
        let n = self.action_counts[player];
        let k = self.type_counts[player] as u32;
        n.checked_pow(k)
            .ok_or(GameError::StrategySpaceOverflow { player })
    }
}

/// A pure strategy: one action per type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureStrategy {
    choices: Vec<usize>,
}

impl PureStrategy {
    pub fn new(choices: Vec<usize>, action_count: usize) -> Result<Self, GameError> {
        for &a in &choices {
            if a >= action_count {
                return Err(GameError::ActionOutOfRange {
                    player: 0,
                    action: a,
                });
            }
        }
        Ok(PureStrategy { choices })
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn action(&self, k: usize) -> usize {
        self.choices[k]
    }

    pub fn type_count(&self) -> usize {
        self.choices.len()
    }

    /// Row-major flat index over the `n^K` strategy space (last type fastest).
    pub fn to_index(&self, action_count: usize) -> usize {
        self.choices
            .iter()
            .fold(0usize, |acc, &a| acc * action_count + a)
    }

    pub fn from_index(mut index: usize, type_count: usize, action_count: usize) -> Self {
        let mut choices = vec![0usize; type_count];
        for slot in choices.iter_mut().rev() {
            *slot = index % action_count;
            index /= action_count;
        }
        PureStrategy { choices }
    }
}

/// Action of a flat strategy index at a given type (no materialization).
pub fn strategy_index_action(
    index: usize,
    k: usize,
    type_count: usize,
    action_count: usize,
) -> usize {
    let shift = type_count - 1 - k;
    (index / action_count.pow(shift as u32)) % action_count
}

/// One action distribution per type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorStrategy {
    per_type: Vec<FiniteDist>,
}

impl BehaviorStrategy {
    pub fn new(per_type: Vec<FiniteDist>) -> Result<Self, GameError> {
        if per_type.is_empty() {
            return Err(GameError::EmptyDomain { player: 0 });
        }
        let n = per_type[0].len();
        if per_type.iter().any(|d| d.len() != n) {
            return Err(GameError::StrategyShapeMismatch { player: 0 });
        }
        Ok(BehaviorStrategy { per_type })
    }

    pub fn uniform(type_count: usize, action_count: usize) -> Self {
        BehaviorStrategy {
            per_type: vec![FiniteDist::uniform(action_count); type_count],
        }
    }

    pub fn from_pure(strategy: &PureStrategy, action_count: usize) -> Self {
        BehaviorStrategy {
            per_type: strategy
                .choices()
                .iter()
                .map(|&a| FiniteDist::point_mass(a, action_count).expect("validated action"))
                .collect(),
        }
    }

    pub fn type_count(&self) -> usize {
        self.per_type.len()
    }

    pub fn action_count(&self) -> usize {
        self.per_type[0].len()
    }

    pub fn action_dist(&self, k: usize) -> &FiniteDist {
        &self.per_type[k]
    }

    pub fn dists(&self) -> &[FiniteDist] {
        &self.per_type
    }

    /// Probability of a full pure strategy under the per-type product.
    pub fn pure_prob(&self, strategy: &PureStrategy) -> f64 {
        self.per_type
            .iter()
            .zip(strategy.choices())
            .map(|(d, &a)| d.prob(a))
            .product()
    }
}

/// A single player's strategy distribution: either independent per type,
/// or an explicit distribution over the `n^K` pure-strategy space
/// (row-major, last type fastest) that may correlate across types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlayerStrategy {
    Behavior(BehaviorStrategy),
    Mixed(FiniteDist),
}

impl PlayerStrategy {
    pub fn validate(&self, type_count: usize, action_count: usize) -> Result<(), GameError> {
        match self {
            PlayerStrategy::Behavior(b) => {
                if b.type_count() != type_count || b.action_count() != action_count {
                    return Err(GameError::StrategyShapeMismatch { player: 0 });
                }
            }
            PlayerStrategy::Mixed(d) => {
                let expected = action_count
                    .checked_pow(type_count as u32)
                    .ok_or(GameError::StrategySpaceOverflow { player: 0 })?;
                if d.len() != expected {
                    return Err(GameError::StrategyShapeMismatch { player: 0 });
                }
            }
        }
        Ok(())
    }

    /// Marginal action distribution at type `k`.
    pub fn action_marginal(&self, type_count: usize, action_count: usize, k: usize) -> FiniteDist {
        match self {
            PlayerStrategy::Behavior(b) => b.action_dist(k).clone(),
            PlayerStrategy::Mixed(d) => {
                let mut weights = vec![0.0; action_count];
                for idx in 0..d.len() {
                    let a = strategy_index_action(idx, k, type_count, action_count);
                    weights[a] += d.prob(idx);
                }
                FiniteDist::from_weights(weights).expect("marginal of a distribution")
            }
        }
    }
}

/// Independent-across-players profile of strategy distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfileDist {
    per_player: Vec<PlayerStrategy>,
}

impl StrategyProfileDist {
    pub fn new(per_player: Vec<PlayerStrategy>) -> Self {
        StrategyProfileDist { per_player }
    }

    pub fn players(&self) -> &[PlayerStrategy] {
        &self.per_player
    }

    pub fn player(&self, i: usize) -> &PlayerStrategy {
        &self.per_player[i]
    }

    pub fn validate_for(&self, game: &BayesianGame) -> Result<(), GameError> {
        if self.per_player.len() != game.num_players() {
            return Err(GameError::ProfileSizeMismatch {
                expected: game.num_players(),
                actual: self.per_player.len(),
            });
        }
        for (player, s) in self.per_player.iter().enumerate() {
            s.validate(game.type_count(player), game.action_count(player))
                .map_err(|_| GameError::StrategyShapeMismatch { player })?;
        }
        Ok(())
    }
}

/// A uniform mixture of product profiles: component `c` assigns every
/// player an independent per-type behavior strategy. This is the rank-T
/// representation produced by uncoupled dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyMixture {
    components: Vec<Vec<BehaviorStrategy>>,
}

impl StrategyMixture {
    pub fn new(components: Vec<Vec<BehaviorStrategy>>) -> Result<Self, GameError> {
        if components.is_empty() {
            return Err(GameError::Dist(DistError::EmptyMixture));
        }
        let m = components[0].len();
        if m == 0 || components.iter().any(|c| c.len() != m) {
            return Err(GameError::ProfileSizeMismatch {
                expected: m,
                actual: components
                    .iter()
                    .map(Vec::len)
                    .find(|&l| l != m)
                    .unwrap_or(0),
            });
        }
        Ok(StrategyMixture { components })
    }

    pub fn rank(&self) -> usize {
        self.components.len()
    }

    pub fn num_players(&self) -> usize {
        self.components[0].len()
    }

    pub fn components(&self) -> &[Vec<BehaviorStrategy>] {
        &self.components
    }

    pub fn validate_for(&self, game: &BayesianGame) -> Result<(), GameError> {
        for component in &self.components {
            if component.len() != game.num_players() {
                return Err(GameError::ProfileSizeMismatch {
                    expected: game.num_players(),
                    actual: component.len(),
                });
            }
            for (player, b) in component.iter().enumerate() {
                if b.type_count() != game.type_count(player)
                    || b.action_count() != game.action_count(player)
                {
                    return Err(GameError::StrategyShapeMismatch { player });
                }
            }
        }
        Ok(())
    }
}

// Expected utilities for a fixed type profile when each player draws an
// action from the given marginal, independently.
fn utilities_at_types(game: &BayesianGame, types: &[usize], marginals: &[&FiniteDist]) -> Vec<f64> {
    let m = game.num_players();
    let mut out = vec![0.0; m];
    let mut actions = vec![0usize; m];
    let action_space = domain_size(game.action_counts());
    for flat in 0..action_space {
        coords_of_into(game.action_counts(), flat, &mut actions);
        let mut w = 1.0;
        for (i, &a) in actions.iter().enumerate() {
            w *= marginals[i].prob(a);
            if w == 0.0 {
                break;
            }
        }
        if w == 0.0 {
            continue;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            *slot += w * game.utility(i, types, &actions);
        }
    }
    out
}

/// Exact expected utility of every player under an independent profile,
/// by enumeration over type and action profiles.
pub fn expected_utility(
    game: &BayesianGame,
    profile: &StrategyProfileDist,
) -> Result<Vec<f64>, GameError> {
    profile.validate_for(game)?;
    let m = game.num_players();
    // Per-player, per-type action marginals are sufficient: for a fixed
    // type profile each player's utility touches one type only, and
    // players randomize independently.
    let marginals: Vec<Vec<FiniteDist>> = (0..m)
        .map(|i| {
            (0..game.type_count(i))
                .map(|k| {
                    profile
                        .player(i)
                        .action_marginal(game.type_count(i), game.action_count(i), k)
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; m];
    let mut types = vec![0usize; m];
    for flat in 0..game.prior().len() {
        let w = game.prior().prob(flat);
        if w == 0.0 {
            continue;
        }
        coords_of_into(game.type_counts(), flat, &mut types);
        let dists: Vec<&FiniteDist> = (0..m).map(|i| &marginals[i][types[i]]).collect();
        let u = utilities_at_types(game, &types, &dists);
        for (slot, ui) in out.iter_mut().zip(u) {
            *slot += w * ui;
        }
    }
    Ok(out)
}

/// Exact per-action conditional reward vector of `player` at type `k`:
/// entry `j` is the expected payoff of playing `j` when the opponents
/// draw from `profile` and the other types follow the conditioned prior.
/// `profile` entries other than `player`'s are used; `player`'s own entry
/// is ignored.
pub fn conditional_reward_vector(
    game: &BayesianGame,
    player: usize,
    k: usize,
    profile: &StrategyProfileDist,
) -> Result<Vec<f64>, GameError> {
    profile.validate_for(game)?;
    let rows = game.conditional_type_profiles(player, k)?;
    let m = game.num_players();
    let marginals: Vec<Vec<FiniteDist>> = (0..m)
        .map(|i| {
            (0..game.type_count(i))
                .map(|kk| {
                    profile
                        .player(i)
                        .action_marginal(game.type_count(i), game.action_count(i), kk)
                })
                .collect()
        })
        .collect();
    let n = game.action_count(player);
    let mut out = vec![0.0; n];

    // Enumerate opponents' joint actions for each conditioned type profile.
    let other_players: Vec<usize> = (0..m).filter(|&i| i != player).collect();
    let other_shape: Vec<usize> = other_players
        .iter()
        .map(|&i| game.action_count(i))
        .collect();
    let other_space = domain_size(&other_shape);
    let mut other_actions = vec![0usize; other_players.len()];
    let mut actions = vec![0usize; m];
    for (types, w) in &rows {
        for flat in 0..other_space {
            coords_of_into(&other_shape, flat, &mut other_actions);
            let mut prob = *w;
            for (pos, &i) in other_players.iter().enumerate() {
                prob *= marginals[i][types[i]].prob(other_actions[pos]);
                if prob == 0.0 {
                    break;
                }
            }
            if prob == 0.0 {
                continue;
            }
            for (pos, &i) in other_players.iter().enumerate() {
                actions[i] = other_actions[pos];
            }
            for (j, slot) in out.iter_mut().enumerate() {
                actions[player] = j;
                *slot += prob * game.utility(player, types, &actions);
            }
        }
    }
    Ok(out)
}

/// Default scale constant for [`default_sample_count`].
pub const DEFAULT_SAMPLE_SCALE: f64 = 8.0;

/// Default Monte Carlo sample count `ceil(c·ln(mnK/ε)/ε²)`.
pub fn default_sample_count(m: usize, n: usize, k: usize, eps: f64, scale: f64) -> usize {
    let arg = (m * n * k) as f64 / eps;
    (scale * arg.ln() / (eps * eps)).ceil().max(1.0) as usize
}

/// Monte Carlo estimate of [`conditional_reward_vector`]. Deterministic
/// given the generator state.
pub fn sampled_reward_vector<R: Rng + ?Sized>(
    game: &BayesianGame,
    player: usize,
    k: usize,
    profile: &StrategyProfileDist,
    sample_count: usize,
    rng: &mut R,
) -> Result<Vec<f64>, GameError> {
    if sample_count == 0 {
        return Err(GameError::ZeroSampleCount);
    }
    profile.validate_for(game)?;
    let rows = game.conditional_type_profiles(player, k)?;
    let row_dist = FiniteDist::from_weights(rows.iter().map(|(_, w)| *w).collect())?;
    let m = game.num_players();
    let marginals: Vec<Vec<FiniteDist>> = (0..m)
        .map(|i| {
            (0..game.type_count(i))
                .map(|kk| {
                    profile
                        .player(i)
                        .action_marginal(game.type_count(i), game.action_count(i), kk)
                })
                .collect()
        })
        .collect();
    let n = game.action_count(player);
    let mut out = vec![0.0; n];
    let mut actions = vec![0usize; m];
    for _ in 0..sample_count {
        let row = row_dist.sample(rng);
        let types = &rows[row].0;
        for i in 0..m {
            if i != player {
                actions[i] = marginals[i][types[i]].sample(rng);
            }
        }
        for (j, slot) in out.iter_mut().enumerate() {
            actions[player] = j;
            *slot += game.utility(player, types, &actions);
        }
    }
    for slot in &mut out {
        *slot /= sample_count as f64;
    }
    Ok(out)
}
