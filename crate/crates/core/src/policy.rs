//! Behavior and target policies.
//!
//! The behavior side is the center/corner/edge Tic-Tac-Toe heuristic (one-hot),
//! a uniform policy, a per-state table for MDPs, and a λ-uniform mixture that
//! turns any of them into a strictly positive distribution. The target side is
//! a temperature softmax over tree Q-values.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{ActionId, GameState, MdpState};
use crate::error::{Error, Result};

pub const SUM_TOLERANCE: f64 = 1e-9;

/// Center, corners, then edges.
pub const PREFERRED_MOVES: [usize; 9] = [4, 0, 2, 6, 8, 1, 3, 5, 7];

/// A distribution over an ordered, non-empty action support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDistribution {
    support: Vec<ActionId>,
    probs: Vec<f64>,
}

impl PolicyDistribution {
    pub fn new(support: Vec<ActionId>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::NoLegalAction);
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidConfig(format!(
                "support has {} actions but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig("probabilities must be finite and >= 0".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidConfig(format!("probabilities sum to {sum}")));
        }
        Ok(PolicyDistribution { support, probs })
    }

    pub fn uniform(support: Vec<ActionId>) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::NoLegalAction);
        }
        Ok(PolicyDistribution {
            support,
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn one_hot(support: Vec<ActionId>, action: ActionId) -> Result<Self> {
        let probs: Vec<f64> = support.iter().map(|&a| if a == action { 1.0 } else { 0.0 }).collect();
        if !probs.contains(&1.0) {
            return Err(Error::IllegalMove { action });
        }
        Self::new(support, probs)
    }

    pub fn support(&self) -> &[ActionId] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Probability of `action`; zero outside the support.
    pub fn prob(&self, action: ActionId) -> f64 {
        self.support
            .iter()
            .position(|&a| a == action)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActionId, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionId {
        let dist = WeightedIndex::new(&self.probs).expect("validated distribution");
        self.support[dist.sample(rng)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    lambda: f64,
}

impl MixtureParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidConfig(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(MixtureParams { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// First free cell from [`PREFERRED_MOVES`].
pub fn heuristic_action(state: &GameState) -> Result<ActionId> {
    heuristic_action_with(state, &mut ChaCha8Rng::seed_from_u64(0))
}

/// Same as [`heuristic_action`], with an explicit stream for the random
/// fallback. The preference list covers the whole board, so the fallback only
/// guards against a malformed list.
pub fn heuristic_action_with<R: Rng + ?Sized>(state: &GameState, rng: &mut R) -> Result<ActionId> {
    let legal = state.legal_actions();
    if legal.is_empty() {
        return Err(Error::NoLegalAction);
    }
    if let Some(&cell) = PREFERRED_MOVES.iter().find(|&&c| legal.contains(&ActionId(c))) {
        return Ok(ActionId(cell));
    }
    legal.choose(rng).copied().ok_or(Error::NoLegalAction)
}

pub fn heuristic_distribution(state: &GameState) -> Result<PolicyDistribution> {
    let chosen = heuristic_action(state)?;
    PolicyDistribution::one_hot(state.legal_actions(), chosen)
}

/// `λ/|A| + (1-λ)·base(a)` over the base support.
pub fn mix_with_uniform(base: &PolicyDistribution, params: MixtureParams) -> PolicyDistribution {
    let lambda = params.lambda;
    let floor = lambda / base.len() as f64;
    let probs = base.probs.iter().map(|p| floor + (1.0 - lambda) * p).collect();
    PolicyDistribution {
        support: base.support.clone(),
        probs,
    }
}

/// Softmax of `Q/τ`, shifted by the max for overflow safety.
pub fn target_policy(q_values: &[(ActionId, f64)], tau: f64) -> Result<PolicyDistribution> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidTemperature(tau));
    }
    if q_values.is_empty() {
        return Err(Error::NoLegalAction);
    }
    let max = q_values.iter().map(|&(_, q)| q).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = q_values.iter().map(|&(_, q)| ((q - max) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(PolicyDistribution {
        support: q_values.iter().map(|&(a, _)| a).collect(),
        probs: weights.into_iter().map(|w| w / total).collect(),
    })
}

/// A behavior policy as seen by the search: a distribution over the legal
/// actions of a state.
pub trait BehaviorPolicy<S>: Sync {
    fn distribution(&self, state: &S, legal: &[ActionId]) -> Result<PolicyDistribution>;
}

impl<S, P: BehaviorPolicy<S> + ?Sized> BehaviorPolicy<S> for &P {
    fn distribution(&self, state: &S, legal: &[ActionId]) -> Result<PolicyDistribution> {
        (**self).distribution(state, legal)
    }
}

/// The one-hot center/corner/edge heuristic.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicPolicy;

impl BehaviorPolicy<GameState> for HeuristicPolicy {
    fn distribution(&self, state: &GameState, _legal: &[ActionId]) -> Result<PolicyDistribution> {
        heuristic_distribution(state)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl<S> BehaviorPolicy<S> for UniformPolicy {
    fn distribution(&self, _state: &S, legal: &[ActionId]) -> Result<PolicyDistribution> {
        PolicyDistribution::uniform(legal.to_vec())
    }
}

/// Wraps a policy in the λ-uniform mixture.
#[derive(Debug, Clone, Copy)]
pub struct Smoothed<P> {
    pub inner: P,
    pub mixture: MixtureParams,
}

impl<P> Smoothed<P> {
    pub fn new(inner: P, mixture: MixtureParams) -> Self {
        Smoothed { inner, mixture }
    }
}

impl<S, P: BehaviorPolicy<S>> BehaviorPolicy<S> for Smoothed<P> {
    fn distribution(&self, state: &S, legal: &[ActionId]) -> Result<PolicyDistribution> {
        let base = self.inner.distribution(state, legal)?;
        Ok(mix_with_uniform(&base, self.mixture))
    }
}

/// Stationary per-state action probabilities for a finite MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    /// `rows[s][a]` is the probability of action `a` in state `s`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        if n_actions == 0 {
            return Err(Error::NoLegalAction);
        }
        let mut probs = Vec::with_capacity(rows.len() * n_actions);
        for row in rows {
            if row.len() != n_actions {
                return Err(Error::InvalidConfig("ragged policy table".into()));
            }
            // validates the row
            PolicyDistribution::new((0..n_actions).map(ActionId).collect(), row.clone())?;
            probs.extend(row);
        }
        Ok(TabularPolicy { n_actions, probs })
    }

    /// The same action distribution in every state.
    pub fn stationary(n_states: usize, row: Vec<f64>) -> Result<Self> {
        Self::new(vec![row; n_states])
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self::stationary(n_states, vec![1.0 / n_actions as f64; n_actions]).expect("uniform row")
    }

    pub fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[state * self.n_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }
}

impl BehaviorPolicy<MdpState> for TabularPolicy {
    fn distribution(&self, state: &MdpState, legal: &[ActionId]) -> Result<PolicyDistribution> {
        let probs = legal.iter().map(|a| self.prob(state.state, a.0)).collect();
        PolicyDistribution::new(legal.to_vec(), probs)
    }
}
