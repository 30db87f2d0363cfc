//! Learning dynamics and equilibrium verification for Bayesian games.
//!
//! The crate has three layers:
//!
//! - primitives: exact finite distributions ([`dist`]), Bayesian game
//!   representation and reward evaluation ([`game`]), and the two online
//!   learning algorithms — multiplicative weights and the aggregating
//!   rule for online density estimation ([`regret`]);
//! - dynamics: the multi-scale per-type MWU runner whose empirical play
//!   converges to every-type approximate correlated equilibria
//!   ([`dynamics`]), with exact regret accounting over the trace;
//! - verification: brute-force and decomposition-based equilibrium
//!   checkers ([`eq_check`]) and the three-player margin-scoring gadget
//!   with the rank-T CCE to BNE reduction ([`gadget`]).
//!
//! Everything is deterministic given a seed: randomness flows through
//! explicitly passed generators derived from a [`rng::SeedTree`].

pub mod dist;
pub mod dynamics;
pub mod eq_check;
pub mod gadget;
pub mod game;
pub mod regret;
pub mod rng;

pub use dist::{
    behaviorize, condition, marginal, Axis, DistError, FiniteDist, MixtureOfProducts, ProductDist,
};
pub use dynamics::{
    empirical_distribution, external_regret_bound, per_type_swap_regret, run_dynamics,
    swap_regret_bound, thread_external_regret, DynamicsError, DynamicsParams, DynamicsTrace,
    RewardMode,
};
pub use eq_check::{
    behaviorization_demo, best_swap_gain, check_bne_product, check_every_type_nfce,
    check_ex_ante_nfce, mixture_expected_utility, BehaviorizationDemo, BneMode, CheckError,
    EquilibriumReport, TypeScope, Witness,
};
pub use gadget::{
    deviation_rollout_player, gadget_utility, kibitzer_deviation_utility, reduction_extract_bne,
    rollout_utility, sample_gadget_outcome, GadgetError, GadgetOutcome, History, KibitzerAction,
    RankTCce,
};
pub use game::{
    conditional_reward_vector, expected_utility, sampled_reward_vector, BayesianGame,
    BehaviorStrategy, GameError, PlayerStrategy, PureStrategy, StrategyMixture,
    StrategyProfileDist,
};
pub use regret::{default_eta, MwuState, RegretError, VovkState};
pub use rng::SeedTree;
