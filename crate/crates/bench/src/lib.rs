//! Shared fixtures for the benchmark targets.

use equilearn_core::game::BayesianGame;
use equilearn_core::rng::SeedTree;

/// Deterministic random game of the given shape.
pub fn fixture_game(types: &[usize], actions: &[usize], seed: u64) -> BayesianGame {
    let mut rng = SeedTree::new(seed).rng();
    BayesianGame::random(types, actions, &mut rng)
}
