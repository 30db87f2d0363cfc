//! Online learning primitives: multiplicative weights over rewards, and
//! the aggregating rule over log loss for online density estimation.
//!
//! All logarithms are natural. Weight arithmetic stays in the log domain
//! throughout; raw likelihoods are never multiplied together, so hundreds
//! of rounds cannot underflow. A likelihood of exactly zero eliminates an
//! expert rather than being floored.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, FiniteDist};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegretError {
    #[error("need at least one action or expert")]
    EmptyDomain,
    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("reward vector has {actual} entries, expected {expected}")]
    RewardLengthMismatch { expected: usize, actual: usize },
    #[error("reward entry {value} at index {index} is outside [0, {bound}]")]
    RewardOutOfRange {
        index: usize,
        value: f64,
        bound: f64,
    },
    #[error("likelihood {value} at index {index} is outside [0, 1]")]
    LikelihoodOutOfRange { index: usize, value: f64 },
    #[error("outcome impossible under every expert")]
    AllExpertsEliminated,
    #[error("expert predictions disagree on the outcome domain")]
    PredictionDomainMismatch,
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Learning rate `√(ln(n)/horizon)/bound` that yields the
/// `2·bound·√(horizon·ln n)` external-regret guarantee.
pub fn default_eta(n: usize, horizon: usize, bound: f64) -> f64 {
    ((n as f64).ln() / horizon as f64).sqrt() / bound
}

/// Multiplicative-weights state over `n` actions with rewards in
/// `[0, bound]`. The played distribution at round `t` is proportional to
/// `exp(eta · Σ_{τ<t} r_τ(i))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwuState {
    eta: f64,
    bound: f64,
    cumulative: Vec<f64>,
    round: usize,
}

impl MwuState {
    pub fn new(n: usize, eta: f64, bound: f64) -> Result<Self, RegretError> {
        if n == 0 {
            return Err(RegretError::EmptyDomain);
        }
        if eta <= 0.0 || !eta.is_finite() {
            return Err(RegretError::InvalidParameter {
                name: "eta",
                value: eta,
            });
        }
        if bound <= 0.0 || !bound.is_finite() {
            return Err(RegretError::InvalidParameter {
                name: "bound",
                value: bound,
            });
        }
        Ok(MwuState {
            eta,
            bound,
            cumulative: vec![0.0; n],
            round: 0,
        })
    }

    /// State tuned for `horizon` rounds via [`default_eta`].
    pub fn with_default_eta(n: usize, horizon: usize, bound: f64) -> Result<Self, RegretError> {
        Self::new(n, default_eta(n, horizon, bound), bound)
    }

    pub fn action_count(&self) -> usize {
        self.cumulative.len()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cumulative_rewards(&self) -> &[f64] {
        &self.cumulative
    }

    /// Current played distribution: softmax of `eta · cumulative`, with
    /// max subtraction so large cumulative sums cannot overflow.
    pub fn distribution(&self) -> FiniteDist {
        let max = self
            .cumulative
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = self
            .cumulative
            .iter()
            .map(|&c| (self.eta * (c - max)).exp())
            .collect();
        FiniteDist::from_weights(weights).expect("softmax weights are positive")
    }

    /// Accumulates one observed reward vector with entries in
    /// `[0, bound]` and advances the round counter.
    pub fn update(&mut self, reward: &[f64]) -> Result<(), RegretError> {
        if reward.len() != self.cumulative.len() {
            return Err(RegretError::RewardLengthMismatch {
                expected: self.cumulative.len(),
                actual: reward.len(),
            });
        }
        // Small slack for rewards assembled by float summation.
        let hi = self.bound * (1.0 + 1e-12) + 1e-9;
        for (index, &value) in reward.iter().enumerate() {
            if !value.is_finite() || value < 0.0 || value > hi {
                return Err(RegretError::RewardOutOfRange {
                    index,
                    value,
                    bound: self.bound,
                });
            }
        }
        for (slot, &value) in self.cumulative.iter_mut().zip(reward) {
            *slot += value;
        }
        self.round += 1;
        Ok(())
    }
}

/// Aggregating-rule state over a fixed set of experts, tracked as
/// cumulative log loss per expert (`+∞` once an expert assigned zero
/// likelihood to an observed outcome).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VovkState {
    cumulative_log_loss: Vec<f64>,
}

impl VovkState {
    pub fn new(expert_count: usize) -> Result<Self, RegretError> {
        if expert_count == 0 {
            return Err(RegretError::EmptyDomain);
        }
        Ok(VovkState {
            cumulative_log_loss: vec![0.0; expert_count],
        })
    }

    pub fn expert_count(&self) -> usize {
        self.cumulative_log_loss.len()
    }

    pub fn cumulative_log_loss(&self) -> &[f64] {
        &self.cumulative_log_loss
    }

    /// Posterior over experts: weight `∝ exp(−cumulative_log_loss)`.
    pub fn posterior(&self) -> Result<FiniteDist, RegretError> {
        let min = self
            .cumulative_log_loss
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min.is_infinite() {
            return Err(RegretError::AllExpertsEliminated);
        }
        let weights: Vec<f64> = self
            .cumulative_log_loss
            .iter()
            .map(|&l| (-(l - min)).exp())
            .collect();
        Ok(FiniteDist::from_weights(weights).expect("finite minimum keeps one weight positive"))
    }

    /// Charges each expert the log loss of the observed outcome, given
    /// each expert's likelihood for it. Zero likelihood eliminates the
    /// expert permanently.
    pub fn update(&mut self, likelihoods: &[f64]) -> Result<(), RegretError> {
        if likelihoods.len() != self.cumulative_log_loss.len() {
            return Err(RegretError::RewardLengthMismatch {
                expected: self.cumulative_log_loss.len(),
                actual: likelihoods.len(),
            });
        }
        for (index, &value) in likelihoods.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0 + 1e-12).contains(&value) {
                return Err(RegretError::LikelihoodOutOfRange { index, value });
            }
        }
        let mut any_alive = false;
        for (slot, &lik) in self.cumulative_log_loss.iter_mut().zip(likelihoods) {
            if lik > 0.0 {
                *slot += -(lik.ln());
            } else {
                *slot = f64::INFINITY;
            }
            any_alive |= slot.is_finite();
        }
        if !any_alive {
            return Err(RegretError::AllExpertsEliminated);
        }
        Ok(())
    }

    /// Posterior-weighted mixture of the experts' current predictions.
    pub fn predict(&self, expert_predictions: &[FiniteDist]) -> Result<FiniteDist, RegretError> {
        if expert_predictions.len() != self.expert_count() {
            return Err(RegretError::RewardLengthMismatch {
                expected: self.expert_count(),
                actual: expert_predictions.len(),
            });
        }
        let outcome_count = expert_predictions[0].len();
        if expert_predictions.iter().any(|p| p.len() != outcome_count) {
            return Err(RegretError::PredictionDomainMismatch);
        }
        let q = self.posterior()?;
        let mut weights = vec![0.0; outcome_count];
        for (i, pred) in expert_predictions.iter().enumerate() {
            let qi = q.prob(i);
            if qi == 0.0 {
                continue;
            }
            for (slot, &p) in weights.iter_mut().zip(pred.probs()) {
                *slot += qi * p;
            }
        }
        Ok(FiniteDist::from_weights(weights)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;
    use proptest::prelude::*;
    use rand::Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn first_round_plays_uniform() {
        let s = MwuState::new(5, 0.3, 1.0).unwrap();
        for i in 0..5 {
            assert_close(s.distribution().prob(i), 0.2, 1e-15);
        }
    }

    #[test]
    fn identical_cumulative_rewards_stay_uniform() {
        let mut s = MwuState::new(3, 0.7, 1.0).unwrap();
        s.update(&[0.4, 0.4, 0.4]).unwrap();
        s.update(&[0.9, 0.9, 0.9]).unwrap();
        for i in 0..3 {
            assert_close(s.distribution().prob(i), 1.0 / 3.0, 1e-15);
        }
    }

    #[test]
    fn softmax_two_actions_closed_form() {
        let mut s = MwuState::new(2, 1.0, 1.0).unwrap();
        s.update(&[1.0, 0.0]).unwrap();
        let d = s.distribution();
        assert_close(d.prob(0), 0.7310585786300049, 1e-15);
        assert_close(d.prob(1), 0.2689414213699951, 1e-15);
    }

    #[test]
    fn zero_reward_leaves_distribution_unchanged() {
        let mut s = MwuState::new(4, 0.5, 1.0).unwrap();
        s.update(&[0.2, 0.9, 0.1, 0.4]).unwrap();
        let before = s.distribution();
        s.update(&[0.0; 4]).unwrap();
        assert_eq!(before, s.distribution());
        assert_eq!(s.round(), 2);
    }

    #[test]
    fn updates_commute_in_their_sum() {
        let r1 = [0.3, 0.8, 0.1];
        let r2 = [0.9, 0.2, 0.5];
        let mut a = MwuState::new(3, 0.4, 1.0).unwrap();
        a.update(&r1).unwrap();
        a.update(&r2).unwrap();
        let mut b = MwuState::new(3, 0.4, 1.0).unwrap();
        b.update(&r2).unwrap();
        b.update(&r1).unwrap();
        assert_eq!(a.cumulative_rewards(), b.cumulative_rewards());
    }

    #[test]
    fn out_of_range_reward_is_rejected() {
        let mut s = MwuState::new(2, 0.5, 1.0).unwrap();
        assert!(matches!(
            s.update(&[0.5, 1.1]),
            Err(RegretError::RewardOutOfRange { index: 1, .. })
        ));
        assert!(s.update(&[-0.1, 0.0]).is_err());
    }

    #[test]
    fn default_eta_examples() {
        assert_close(default_eta(2, 100, 1.0), 0.08325546111576977, 1e-15);
        assert_close(
            default_eta(2, 100, 2.0),
            default_eta(2, 100, 1.0) / 2.0,
            1e-15,
        );
        assert_close(
            default_eta(2, 400, 1.0),
            default_eta(2, 100, 1.0) / 2.0,
            1e-15,
        );
    }

    // Regret against the best fixed action for an arbitrary reward
    // sequence, straight from the definition.
    fn external_regret(rewards: &[Vec<f64>], n: usize, eta: f64) -> f64 {
        let mut s = MwuState::new(n, eta, 1.0).unwrap();
        let mut played = 0.0;
        let mut totals = vec![0.0; n];
        for r in rewards {
            let d = s.distribution();
            played += d.probs().iter().zip(r).map(|(p, ri)| p * ri).sum::<f64>();
            for (t, ri) in totals.iter_mut().zip(r) {
                *t += ri;
            }
            s.update(r).unwrap();
        }
        totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - played
    }

    #[test]
    fn regret_bound_holds_on_random_sequences() {
        for seed in 0..40u64 {
            let mut rng = SeedTree::new(seed).rng();
            let n = [2, 4, 8][(seed % 3) as usize];
            let t = 128;
            let rewards: Vec<Vec<f64>> = (0..t)
                .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
                .collect();
            let regret = external_regret(&rewards, n, default_eta(n, t, 1.0));
            let bound = 2.0 * ((t as f64) * (n as f64).ln()).sqrt();
            assert!(regret <= bound, "seed {seed}: {regret} > {bound}");
        }
    }

    #[test]
    fn vovk_equal_likelihoods_keep_posterior() {
        let mut s = VovkState::new(3).unwrap();
        s.update(&[0.4, 0.4, 0.4]).unwrap();
        let q = s.posterior().unwrap();
        for i in 0..3 {
            assert_close(q.prob(i), 1.0 / 3.0, 1e-15);
        }
    }

    #[test]
    fn vovk_posterior_normalizes_likelihoods() {
        let mut s = VovkState::new(2).unwrap();
        s.update(&[0.9, 0.1]).unwrap();
        let q = s.posterior().unwrap();
        assert_close(q.prob(0), 0.9, 1e-12);
        assert_close(q.prob(1), 0.1, 1e-12);
    }

    #[test]
    fn vovk_zero_likelihood_eliminates_forever() {
        let mut s = VovkState::new(3).unwrap();
        s.update(&[0.5, 0.0, 0.5]).unwrap();
        s.update(&[0.2, 0.9, 0.7]).unwrap();
        let q = s.posterior().unwrap();
        assert_eq!(q.prob(1), 0.0);
        assert!(q.prob(0) > 0.0 && q.prob(2) > 0.0);
    }

    #[test]
    fn vovk_all_eliminated_is_an_error() {
        let mut s = VovkState::new(2).unwrap();
        assert!(matches!(
            s.update(&[0.0, 0.0]),
            Err(RegretError::AllExpertsEliminated)
        ));
    }

    #[test]
    fn vovk_predict_examples() {
        let s = VovkState::new(1).unwrap();
        let p = FiniteDist::new(vec![0.2, 0.8]).unwrap();
        assert_eq!(s.predict(std::slice::from_ref(&p)).unwrap(), p);

        let s = VovkState::new(2).unwrap();
        let preds = vec![
            FiniteDist::point_mass(0, 2).unwrap(),
            FiniteDist::point_mass(1, 2).unwrap(),
        ];
        let mix = s.predict(&preds).unwrap();
        assert_close(mix.prob(0), 0.5, 1e-15);

        let mut s = VovkState::new(2).unwrap();
        s.update(&[0.9, 0.1]).unwrap();
        let mix = s.predict(&preds).unwrap();
        assert_close(mix.prob(0), 0.9, 1e-12);
        assert_close(mix.prob(1), 0.1, 1e-12);
    }

    #[test]
    fn vovk_long_horizon_stays_finite() {
        // 10_000 rounds of small likelihoods would underflow naive
        // products; the log-domain posterior must stay well defined.
        let mut s = VovkState::new(2).unwrap();
        for _ in 0..10_000 {
            s.update(&[1e-3, 2e-3]).unwrap();
        }
        let q = s.posterior().unwrap();
        assert!(q.prob(1) > q.prob(0));
        assert_close(q.prob(0) + q.prob(1), 1.0, 1e-12);
    }

    #[test]
    fn realizable_density_estimation_smoke() {
        // Outcomes drawn from a fixed expert: averaged prediction TV to
        // that expert should be within the aggregating-rule bound.
        let experts = 4usize;
        let outcomes = 3usize;
        let horizon = 256usize;
        let mut total = 0.0;
        let seeds = 20u64;
        for seed in 0..seeds {
            let tree = SeedTree::new(seed);
            let mut setup = tree.child(0).rng();
            let tables: Vec<FiniteDist> = (0..experts)
                .map(|_| {
                    FiniteDist::from_weights(
                        (0..outcomes)
                            .map(|_| setup.random_range(0.05..1.0))
                            .collect(),
                    )
                    .unwrap()
                })
                .collect();
            let star = setup.random_range(0..experts);
            let mut play = tree.child(1).rng();
            let mut state = VovkState::new(experts).unwrap();
            let mut tv_sum = 0.0;
            for _ in 0..horizon {
                let pred = state.predict(&tables).unwrap();
                tv_sum += pred.tv_distance(&tables[star]).unwrap();
                let o = tables[star].sample(&mut play);
                let liks: Vec<f64> = tables.iter().map(|t| t.prob(o)).collect();
                state.update(&liks).unwrap();
            }
            total += tv_sum / horizon as f64;
        }
        let mean = total / seeds as f64;
        let bound = ((experts as f64).ln() / horizon as f64).sqrt();
        assert!(mean <= bound + 0.05, "{mean} > {bound} + 0.05");
    }

    proptest! {
        // Softmax shift invariance: adding a constant to all cumulative
        // rewards leaves the played distribution unchanged.
        #[test]
        fn distribution_is_shift_invariant(
            base in prop::collection::vec(0.0..50.0f64, 2..6),
            shift in 0.0..40.0f64,
        ) {
            let n = base.len();
            let mut a = MwuState::new(n, 0.3, 100.0).unwrap();
            a.update(&base).unwrap();
            let mut b = MwuState::new(n, 0.3, 100.0).unwrap();
            let shifted: Vec<f64> = base.iter().map(|x| x + shift).collect();
            b.update(&shifted).unwrap();
            let da = a.distribution();
            let db = b.distribution();
            for i in 0..n {
                prop_assert!((da.prob(i) - db.prob(i)).abs() <= 1e-12);
            }
        }
    }
}
