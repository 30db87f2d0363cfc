//! Multi-scale per-type MWU dynamics for Bayesian games.
//!
//! Every player runs `L` threads of per-type MWU learners. Thread `ℓ`
//! holds its strategy fixed on aligned sub-blocks of `H^(ℓ-1)` days,
//! feeds each learner the reward vector aggregated over the sub-block,
//! and restarts from scratch every `H^ℓ` days. The played strategy each
//! day is the uniform mixture over threads of the per-type products.
//!
//! Players are uncoupled: each day the runner publishes every player's
//! mixture and computes rewards for player `i` only from the others'
//! published mixtures, never from their internal learner states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::FiniteDist;
use crate::game::{
    conditional_reward_vector, sampled_reward_vector, BayesianGame, BehaviorStrategy, GameError,
    PlayerStrategy, StrategyMixture, StrategyProfileDist,
};
use crate::regret::{MwuState, RegretError};
use crate::rng::SeedTree;

/// Source strategies are enumerated up to this many pure strategies per
/// player; beyond it the exact swap computation refuses to run.
pub const SWAP_ENUMERATION_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("epsilon {0} is outside (0, 1]")]
    InvalidEpsilon(f64),
    #[error("schedule needs rounds-per-block >= 2 and threads >= 1, got H={rounds} L={threads}")]
    InvalidSchedule { rounds: usize, threads: usize },
    #[error("total days H^L overflows for H={rounds} L={threads}")]
    ScheduleOverflow { rounds: usize, threads: usize },
    #[error("sampled reward mode needs a positive sample count")]
    ZeroSampleCount,
    #[error("day {day} out of range [1, {total}]")]
    DayOutOfRange { day: usize, total: usize },
    #[error("thread {thread} out of range [1, {count}]")]
    ThreadOutOfRange { thread: usize, count: usize },
    #[error("restart {restart} out of range [1, {count}]")]
    RestartOutOfRange { restart: usize, count: usize },
    #[error("player {player} out of range ({count} players)")]
    PlayerOutOfRange { player: usize, count: usize },
    #[error("type {type_index} out of range for player {player}")]
    TypeOutOfRange { player: usize, type_index: usize },
    #[error("pure-strategy space of size {size} exceeds the enumeration cap {cap}")]
    ScaleCapExceeded { size: usize, cap: usize },
    #[error("trace has no days")]
    EmptyTrace,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Regret(#[from] RegretError),
}

/// How per-day reward vectors are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardMode {
    /// Exact enumeration over conditioned types and opponent actions.
    Exact,
    /// Monte Carlo with the given per-vector sample count.
    Sampled { sample_count: usize },
}

/// Schedule parameters of the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsParams {
    epsilon: f64,
    rounds_per_block: usize,
    thread_count: usize,
    total_days: usize,
    reward_mode: RewardMode,
}

impl DynamicsParams {
    /// Derives the schedule from the target accuracy:
    /// `H = ceil(ln(n)/ε²)` (at least 2), `L = ceil(1/ε)`, `T = H^L`.
    pub fn from_epsilon(
        epsilon: f64,
        action_count: usize,
        reward_mode: RewardMode,
    ) -> Result<Self, DynamicsError> {
        if epsilon.is_nan() || epsilon <= 0.0 || epsilon > 1.0 {
            return Err(DynamicsError::InvalidEpsilon(epsilon));
        }
        let rounds = ((action_count as f64).ln() / (epsilon * epsilon)).ceil() as usize;
        let rounds = rounds.max(2);
        let threads = (1.0 / epsilon).ceil() as usize;
        Self::with_schedule(epsilon, rounds, threads, reward_mode)
    }

    /// Uses an explicit `(H, L)` pair; `epsilon` is kept for reporting
    /// and for the swap-regret bound `3εT`.
    pub fn with_schedule(
        epsilon: f64,
        rounds_per_block: usize,
        thread_count: usize,
        reward_mode: RewardMode,
    ) -> Result<Self, DynamicsError> {
        if epsilon.is_nan() || epsilon <= 0.0 || epsilon > 1.0 {
            return Err(DynamicsError::InvalidEpsilon(epsilon));
        }
        if rounds_per_block < 2 || thread_count < 1 {
            return Err(DynamicsError::InvalidSchedule {
                rounds: rounds_per_block,
                threads: thread_count,
            });
        }
        if let RewardMode::Sampled { sample_count } = reward_mode {
            if sample_count == 0 {
                return Err(DynamicsError::ZeroSampleCount);
            }
        }
        let total_days = rounds_per_block.checked_pow(thread_count as u32).ok_or(
            DynamicsError::ScheduleOverflow {
                rounds: rounds_per_block,
                threads: thread_count,
            },
        )?;
        Ok(DynamicsParams {
            epsilon,
            rounds_per_block,
            thread_count,
            total_days,
            reward_mode,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `H`: MWU rounds per restart.
    pub fn rounds_per_block(&self) -> usize {
        self.rounds_per_block
    }

    /// `L`: number of threads.
    pub fn thread_count(&self) -> usize {
        self.thread_count
    }

    /// `T = H^L`: total days.
    pub fn total_days(&self) -> usize {
        self.total_days
    }

    pub fn reward_mode(&self) -> RewardMode {
        self.reward_mode
    }

    /// Days thread `ell` (1-based) holds a strategy fixed: `H^(ell-1)`.
    pub fn block_length(&self, ell: usize) -> usize {
        self.rounds_per_block.pow((ell - 1) as u32)
    }

    /// Days between restarts of thread `ell`: `H^ell`.
    pub fn restart_length(&self, ell: usize) -> usize {
        self.rounds_per_block.pow(ell as u32)
    }

    /// Number of restarts of thread `ell` over the whole run.
    pub fn restart_count(&self, ell: usize) -> usize {
        self.total_days / self.restart_length(ell)
    }

    /// Position of day `t` in thread `ell`'s schedule: the restart index
    /// `β = ceil(t/H^ℓ)` and the round `h = ceil((t−(β−1)H^ℓ)/H^(ℓ−1))`
    /// within it. Both are 1-based.
    pub fn schedule_index(&self, t: usize, ell: usize) -> Result<(usize, usize), DynamicsError> {
        if t == 0 || t > self.total_days {
            return Err(DynamicsError::DayOutOfRange {
                day: t,
                total: self.total_days,
            });
        }
        if ell == 0 || ell > self.thread_count {
            return Err(DynamicsError::ThreadOutOfRange {
                thread: ell,
                count: self.thread_count,
            });
        }
        let restart_len = self.restart_length(ell);
        let block_len = self.block_length(ell);
        let beta = t.div_ceil(restart_len);
        let offset = t - (beta - 1) * restart_len;
        let h = offset.div_ceil(block_len);
        Ok((beta, h))
    }
}

/// External-regret budget `2·√(H·ln n)·H^(ℓ−1)` of one restart of thread
/// `ell`, from the MWU guarantee with horizon `H` and payoff bound
/// `H^(ℓ−1)`.
pub fn external_regret_bound(rounds_per_block: usize, action_count: usize, ell: usize) -> f64 {
    let h = rounds_per_block as f64;
    2.0 * (h * (action_count as f64).ln()).sqrt() * h.powi(ell as i32 - 1)
}

/// Swap-regret budget `3·ε·T` of a full run.
pub fn swap_regret_bound(params: &DynamicsParams) -> f64 {
    3.0 * params.epsilon() * params.total_days() as f64
}

/// One day of the trace: every player's per-thread strategy and per-type
/// reward vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    /// `[player][thread]` strategies published this day.
    pub thread_strategies: Vec<Vec<BehaviorStrategy>>,
    /// `[player][type][action]` realized reward vectors.
    pub rewards: Vec<Vec<Vec<f64>>>,
}

/// Full record of a dynamics run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsTrace {
    params: DynamicsParams,
    type_counts: Vec<usize>,
    action_counts: Vec<usize>,
    days: Vec<DayRecord>,
}

impl DynamicsTrace {
    /// Assembles a trace from recorded days, validating shapes, reward
    /// ranges, and the schedule invariant that thread `ℓ` holds its
    /// strategy fixed on aligned blocks of `H^(ℓ-1)` days.
    pub fn from_parts(
        params: DynamicsParams,
        type_counts: Vec<usize>,
        action_counts: Vec<usize>,
        days: Vec<DayRecord>,
    ) -> Result<Self, DynamicsError> {
        if days.len() != params.total_days() {
            return Err(DynamicsError::DayOutOfRange {
                day: days.len(),
                total: params.total_days(),
            });
        }
        let m = type_counts.len();
        for day in &days {
            if day.thread_strategies.len() != m || day.rewards.len() != m {
                return Err(DynamicsError::PlayerOutOfRange {
                    player: day.thread_strategies.len(),
                    count: m,
                });
            }
            for i in 0..m {
                if day.thread_strategies[i].len() != params.thread_count() {
                    return Err(DynamicsError::ThreadOutOfRange {
                        thread: day.thread_strategies[i].len(),
                        count: params.thread_count(),
                    });
                }
                for b in &day.thread_strategies[i] {
                    if b.type_count() != type_counts[i] || b.action_count() != action_counts[i] {
                        return Err(DynamicsError::Game(GameError::StrategyShapeMismatch {
                            player: i,
                        }));
                    }
                }
                if day.rewards[i].len() != type_counts[i] {
                    return Err(DynamicsError::TypeOutOfRange {
                        player: i,
                        type_index: day.rewards[i].len(),
                    });
                }
                for r in &day.rewards[i] {
                    if r.len() != action_counts[i] {
                        return Err(DynamicsError::Game(GameError::StrategyShapeMismatch {
                            player: i,
                        }));
                    }
                    for &v in r {
                        if !(0.0..=1.0 + 1e-12).contains(&v) {
                            return Err(DynamicsError::Regret(RegretError::RewardOutOfRange {
                                index: 0,
                                value: v,
                                bound: 1.0,
                            }));
                        }
                    }
                }
            }
        }
        let trace = DynamicsTrace {
            params,
            type_counts,
            action_counts,
            days,
        };
        for ell in 1..=params.thread_count() {
            let block = params.block_length(ell);
            for t in 1..=params.total_days() {
                let anchor = ((t - 1) / block) * block + 1;
                for i in 0..m {
                    if trace.thread_strategy(t, i, ell) != trace.thread_strategy(anchor, i, ell) {
                        return Err(DynamicsError::InvalidSchedule {
                            rounds: params.rounds_per_block(),
                            threads: params.thread_count(),
                        });
                    }
                }
            }
        }
        Ok(trace)
    }

    pub fn params(&self) -> &DynamicsParams {
        &self.params
    }

    pub fn days(&self) -> &[DayRecord] {
        &self.days
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

    /// Reward vector of `(player, type)` at 1-based day `t`.
    pub fn reward(&self, t: usize, player: usize, k: usize) -> &[f64] {
        &self.days[t - 1].rewards[player][k]
    }

    /// Per-type strategy of `(player, thread)` at 1-based day `t`.
    pub fn thread_strategy(&self, t: usize, player: usize, ell: usize) -> &BehaviorStrategy {
        &self.days[t - 1].thread_strategies[player][ell - 1]
    }
}

/// Testing hooks for the runner.
#[derive(Debug, Clone, Copy, Default)]
pub struct DynamicsOptions {
    /// Replaces every learner's softmax with a point mass on the action
    /// of minimal cumulative reward. Negative control for bound checks.
    pub corrupt_learner: bool,
}

struct TypeLearner {
    mwu: MwuState,
    pending: Vec<f64>,
}

impl TypeLearner {
    fn fresh(action_count: usize, rounds: usize, bound: f64) -> Result<Self, RegretError> {
        Ok(TypeLearner {
            mwu: MwuState::with_default_eta(action_count, rounds, bound)?,
            pending: vec![0.0; action_count],
        })
    }

    fn strategy(&self, corrupt: bool) -> FiniteDist {
        if corrupt {
            let cum = self.mwu.cumulative_rewards();
            let mut worst = 0usize;
            for (i, &c) in cum.iter().enumerate() {
                if c < cum[worst] {
                    worst = i;
                }
            }
            FiniteDist::point_mass(worst, cum.len()).expect("index in range")
        } else {
            self.mwu.distribution()
        }
    }
}

struct PlayerRun {
    // [thread][type]
    learners: Vec<Vec<TypeLearner>>,
    // strategy held by each thread for its current sub-block
    current: Vec<BehaviorStrategy>,
}

/// Runs the dynamics for all players of `game`, uncoupled, for
/// `params.total_days()` days. Deterministic given `seed` (the seed only
/// matters in sampled reward mode).
pub fn run_dynamics(
    game: &BayesianGame,
    params: &DynamicsParams,
    seed: u64,
) -> Result<DynamicsTrace, DynamicsError> {
    run_dynamics_with_options(game, params, seed, DynamicsOptions::default())
}

/// [`run_dynamics`] with testing hooks exposed.
pub fn run_dynamics_with_options(
    game: &BayesianGame,
    params: &DynamicsParams,
    seed: u64,
    options: DynamicsOptions,
) -> Result<DynamicsTrace, DynamicsError> {
    let m = game.num_players();
    for i in 0..m {
        for k in 0..game.type_count(i) {
            if game.prior_type_marginal(i, k) <= 0.0 {
                return Err(DynamicsError::Game(GameError::ZeroProbabilityType {
                    player: i,
                    type_index: k,
                }));
            }
        }
    }

    let h = params.rounds_per_block();
    let l = params.thread_count();
    let t_total = params.total_days();
    let root = SeedTree::new(seed);

    let mut players: Vec<PlayerRun> = (0..m)
        .map(|i| {
            let n = game.action_count(i);
            let k_count = game.type_count(i);
            let learners = (0..l)
                .map(|ell0| {
                    let bound = params.block_length(ell0 + 1) as f64;
                    (0..k_count)
                        .map(|_| TypeLearner::fresh(n, h, bound))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PlayerRun {
                learners,
                current: vec![BehaviorStrategy::uniform(k_count, n); l],
            })
        })
        .collect::<Result<Vec<_>, DynamicsError>>()?;

    let mut days = Vec::with_capacity(t_total);
    for t in 1..=t_total {
        // Refresh strategies at sub-block boundaries; reset learners at
        // restart boundaries.
        for (i, player) in players.iter_mut().enumerate() {
            for ell0 in 0..l {
                let block = params.block_length(ell0 + 1);
                let restart = params.restart_length(ell0 + 1);
                if (t - 1) % restart == 0 {
                    let bound = block as f64;
                    for learner in &mut player.learners[ell0] {
                        *learner = TypeLearner::fresh(game.action_count(i), h, bound)?;
                    }
                }
                if (t - 1) % block == 0 {
                    let dists = player.learners[ell0]
                        .iter()
                        .map(|lr| lr.strategy(options.corrupt_learner))
                        .collect();
                    player.current[ell0] = BehaviorStrategy::new(dists)?;
                }
            }
        }

        // Publish: per-player per-type marginal of the uniform thread
        // mixture. Marginals are exact for reward evaluation because a
        // fixed type profile touches one type per opponent.
        let published: Vec<PlayerStrategy> = players
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let k_count = game.type_count(i);
                let n = game.action_count(i);
                let per_type = (0..k_count)
                    .map(|k| {
                        let mut acc = vec![0.0; n];
                        for ell0 in 0..l {
                            for (slot, &v) in
                                acc.iter_mut().zip(p.current[ell0].action_dist(k).probs())
                            {
                                *slot += v;
                            }
                        }
                        FiniteDist::from_weights(acc).expect("mixture of distributions")
                    })
                    .collect::<Vec<_>>();
                Ok(PlayerStrategy::Behavior(BehaviorStrategy::new(per_type)?))
            })
            .collect::<Result<Vec<_>, DynamicsError>>()?;
        let profile = StrategyProfileDist::new(published);

        // Rewards per (player, type), in parallel; assembly is by index
        // so thread count never changes the result.
        let tasks: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..game.type_count(i)).map(move |k| (i, k)))
            .collect();
        type RewardResult = ((usize, usize), Result<Vec<f64>, GameError>);
        let reward_results: Vec<RewardResult> = tasks
            .par_iter()
            .map(|&(i, k)| {
                let r = match params.reward_mode() {
                    RewardMode::Exact => conditional_reward_vector(game, i, k, &profile),
                    RewardMode::Sampled { sample_count } => {
                        let mut rng = root.child(i as u64).child(t as u64).child(k as u64).rng();
                        sampled_reward_vector(game, i, k, &profile, sample_count, &mut rng)
                    }
                };
                ((i, k), r)
            })
            .collect();
        let mut rewards: Vec<Vec<Vec<f64>>> = (0..m)
            .map(|i| vec![Vec::new(); game.type_count(i)])
            .collect();
        for ((i, k), r) in reward_results {
            rewards[i][k] = r?;
        }

        // Record the day.
        days.push(DayRecord {
            thread_strategies: players.iter().map(|p| p.current.clone()).collect(),
            rewards: rewards.clone(),
        });

        // Feed learners; update at sub-block ends.
        for (i, player) in players.iter_mut().enumerate() {
            for ell0 in 0..l {
                let block = params.block_length(ell0 + 1);
                for (k, learner) in player.learners[ell0].iter_mut().enumerate() {
                    for (slot, &v) in learner.pending.iter_mut().zip(&rewards[i][k]) {
                        *slot += v;
                    }
                    if t % block == 0 {
                        let pending = std::mem::replace(
                            &mut learner.pending,
                            vec![0.0; game.action_count(i)],
                        );
                        learner.mwu.update(&pending)?;
                    }
                }
            }
        }
    }

    Ok(DynamicsTrace {
        params: *params,
        type_counts: game.type_counts().to_vec(),
        action_counts: game.action_counts().to_vec(),
        days,
    })
}

/// The empirical play of a run, kept factored per day: day `t` is the
/// product over players of their uniform thread mixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPlay {
    // [day][player][thread]
    days: Vec<Vec<Vec<BehaviorStrategy>>>,
}

impl EmpiricalPlay {
    pub fn from_days(days: Vec<Vec<Vec<BehaviorStrategy>>>) -> Result<Self, DynamicsError> {
        if days.is_empty() {
            return Err(DynamicsError::EmptyTrace);
        }
        Ok(EmpiricalPlay { days })
    }

    pub fn day_count(&self) -> usize {
        self.days.len()
    }

    pub fn thread_count(&self) -> usize {
        self.days[0][0].len()
    }

    pub fn num_players(&self) -> usize {
        self.days[0].len()
    }

    pub fn days(&self) -> &[Vec<Vec<BehaviorStrategy>>] {
        &self.days
    }

    /// All `T·L` behavior components of one player, day-major.
    pub fn player_components(&self, player: usize) -> Vec<&BehaviorStrategy> {
        self.days
            .iter()
            .flat_map(|day| day[player].iter())
            .collect()
    }

    /// Expands to the uniform mixture of `T·L^m` product profiles,
    /// refusing beyond `cap` components.
    pub fn expand(&self, cap: usize) -> Result<StrategyMixture, DynamicsError> {
        let m = self.num_players();
        let l = self.thread_count();
        let count = l
            .checked_pow(m as u32)
            .and_then(|per_day| self.day_count().checked_mul(per_day))
            .unwrap_or(usize::MAX);
        if count > cap {
            return Err(DynamicsError::ScaleCapExceeded { size: count, cap });
        }
        let mut components = Vec::with_capacity(count);
        let mut choice = vec![0usize; m];
        for day in &self.days {
            loop {
                components.push(
                    choice
                        .iter()
                        .enumerate()
                        .map(|(i, &ell0)| day[i][ell0].clone())
                        .collect::<Vec<_>>(),
                );
                // advance the per-player thread choice, last player fastest
                let mut pos = m;
                let mut rolled_over = true;
                while pos > 0 {
                    pos -= 1;
                    choice[pos] += 1;
                    if choice[pos] < l {
                        rolled_over = false;
                        break;
                    }
                    choice[pos] = 0;
                }
                if rolled_over {
                    break;
                }
            }
        }
        Ok(StrategyMixture::new(components)?)
    }
}

/// The empirical distribution `μ = (1/T)·Σ_t ⊗_i p_t^(i)` of a trace,
/// factored per day.
pub fn empirical_distribution(trace: &DynamicsTrace) -> EmpiricalPlay {
    EmpiricalPlay {
        days: trace
            .days()
            .iter()
            .map(|d| d.thread_strategies.clone())
            .collect(),
    }
}

/// External regret of thread `ell` of `player` at type `k` over restart
/// `beta`: the best fixed action's cumulative reward minus the thread's
/// played value. The played value uses the per-type marginal identity
/// `Σ_s q(s)·r(s(k)) = ⟨w_k, r⟩`.
pub fn thread_external_regret(
    trace: &DynamicsTrace,
    player: usize,
    ell: usize,
    beta: usize,
    k: usize,
) -> Result<f64, DynamicsError> {
    let params = trace.params();
    if player >= trace.num_players() {
        return Err(DynamicsError::PlayerOutOfRange {
            player,
            count: trace.num_players(),
        });
    }
    if ell == 0 || ell > params.thread_count() {
        return Err(DynamicsError::ThreadOutOfRange {
            thread: ell,
            count: params.thread_count(),
        });
    }
    let restarts = params.restart_count(ell);
    if beta == 0 || beta > restarts {
        return Err(DynamicsError::RestartOutOfRange {
            restart: beta,
            count: restarts,
        });
    }
    if k >= trace.type_counts()[player] {
        return Err(DynamicsError::TypeOutOfRange {
            player,
            type_index: k,
        });
    }
    let restart_len = params.restart_length(ell);
    let start = (beta - 1) * restart_len + 1;
    let n = trace.action_counts()[player];
    let mut totals = vec![0.0; n];
    let mut played = 0.0;
    for t in start..start + restart_len {
        let r = trace.reward(t, player, k);
        let w = trace.thread_strategy(t, player, ell).action_dist(k);
        for ((slot, &ri), &wi) in totals.iter_mut().zip(r).zip(w.probs()) {
            *slot += ri;
            played += wi * ri;
        }
    }
    let best = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(best - played)
}

// Distinct (strategy, aggregated reward) components of one player's
// schedule: thread ℓ contributes one component per sub-block.
fn schedule_components(
    trace: &DynamicsTrace,
    player: usize,
    k: usize,
) -> Vec<(BehaviorStrategy, Vec<f64>)> {
    let params = trace.params();
    let n = trace.action_counts()[player];
    let mut out = Vec::new();
    for ell in 1..=params.thread_count() {
        let block = params.block_length(ell);
        let mut t = 1;
        while t <= params.total_days() {
            let mut agg = vec![0.0; n];
            for day in t..t + block {
                for (slot, &v) in agg.iter_mut().zip(trace.reward(day, player, k)) {
                    *slot += v;
                }
            }
            out.push((trace.thread_strategy(t, player, ell).clone(), agg));
            t += block;
        }
    }
    out
}

/// Exact per-type swap regret of `player` at type `k` over the whole
/// trace: `max_φ Σ_t Σ_s p_t(s)·(r_{t,k}(φ(s)(k)) − r_{t,k}(s(k)))`.
///
/// The optimum decouples per source strategy — `φ(s)(k)` is the argmax
/// of the `p_t(s)`-weighted reward sum — so the computation enumerates
/// source strategies once against the distinct sub-block components of
/// the schedule. Errors when `n^K` exceeds [`SWAP_ENUMERATION_CAP`].
pub fn per_type_swap_regret(
    trace: &DynamicsTrace,
    player: usize,
    k: usize,
) -> Result<f64, DynamicsError> {
    if player >= trace.num_players() {
        return Err(DynamicsError::PlayerOutOfRange {
            player,
            count: trace.num_players(),
        });
    }
    let k_count = trace.type_counts()[player];
    if k >= k_count {
        return Err(DynamicsError::TypeOutOfRange {
            player,
            type_index: k,
        });
    }
    let n = trace.action_counts()[player];
    let strategy_space = n
        .checked_pow(k_count as u32)
        .ok_or(DynamicsError::ScaleCapExceeded {
            size: usize::MAX,
            cap: SWAP_ENUMERATION_CAP,
        })?;
    if strategy_space > SWAP_ENUMERATION_CAP {
        return Err(DynamicsError::ScaleCapExceeded {
            size: strategy_space,
            cap: SWAP_ENUMERATION_CAP,
        });
    }

    let params = trace.params();
    let inv_l = 1.0 / params.thread_count() as f64;
    let components = schedule_components(trace, player, k);

    // Deviation side: enumerate source strategies, each scoring the
    // component-weighted reward sum of its best replacement action.
    let mut best_total = 0.0;
    for s_idx in 0..strategy_space {
        let strategy = crate::game::PureStrategy::from_index(s_idx, k_count, n);
        let mut scores = vec![0.0; n];
        for (q, agg) in &components {
            let w = q.pure_prob(&strategy) * inv_l;
            if w == 0.0 {
                continue;
            }
            for (slot, &a) in scores.iter_mut().zip(agg) {
                *slot += w * a;
            }
        }
        // lowest index wins ties
        let mut best = 0usize;
        for (j, &v) in scores.iter().enumerate() {
            if v > scores[best] {
                best = j;
            }
        }
        best_total += scores[best];
    }

    // Played side via the per-type marginal identity.
    let mut played = 0.0;
    for t in 1..=params.total_days() {
        let r = trace.reward(t, player, k);
        for ell in 1..=params.thread_count() {
            let w = trace.thread_strategy(t, player, ell).action_dist(k);
            for (&wi, &ri) in w.probs().iter().zip(r) {
                played += inv_l * wi * ri;
            }
        }
    }
    Ok(best_total - played)
}
