//! Small enumerable finite-horizon MDP used as ground truth for the estimators.
//!
//! File format (TOML):
//!
//! ```toml
//! n_states = 2
//! n_actions = 2
//! horizon = 3
//! initial_state = 0
//! # row-major [state][action][next_state]
//! transition = [1.0, 0.0,  0.5, 0.5,  0.0, 1.0,  0.3, 0.7]
//! # row-major [state][action]
//! reward = [0.0, 1.0, 0.5, 0.2]
//! ```

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ActionId, Environment, Reward, Seat};
use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    #[serde(default)]
    initial_state: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

/// A state of the time-unrolled MDP; terminal once `t` reaches the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MdpState {
    pub state: usize,
    pub t: usize,
}

impl FiniteMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        horizon: usize,
        initial_state: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self> {
        let mdp = FiniteMdp {
            n_states,
            n_actions,
            horizon,
            initial_state,
            transition,
            reward,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMdp(msg));
        if self.n_states == 0 || self.n_actions == 0 {
            return bad("n_states and n_actions must be positive".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if self.initial_state >= self.n_states {
            return bad(format!("initial_state {} >= n_states", self.initial_state));
        }
        let want_t = self.n_states * self.n_actions * self.n_states;
        if self.transition.len() != want_t {
            return bad(format!(
                "transition has {} entries, expected {want_t}",
                self.transition.len()
            ));
        }
        let want_r = self.n_states * self.n_actions;
        if self.reward.len() != want_r {
            return bad(format!("reward has {} entries, expected {want_r}", self.reward.len()));
        }
        if let Some(r) = self.reward.iter().find(|r| !r.is_finite()) {
            return bad(format!("non-finite reward {r}"));
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.row(s, a);
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return bad(format!("transition row ({s},{a}) has a probability outside [0,1]"));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return bad(format!("transition row ({s},{a}) sums to {sum}"));
                }
            }
        }
        Ok(())
    }

    /// The default validation instance: 4 states, 2 actions, horizon 3, with
    /// seeded random transition rows and rewards in `[0, 1]`.
    pub fn validation_default(seed: u64) -> Self {
        Self::random(4, 2, 3, seed)
    }

    pub fn random(n_states: usize, n_actions: usize, horizon: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            let weights: Vec<f64> = (0..n_states).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let mut row: Vec<f64> = weights.iter().map(|w| w / total).collect();
            // absorb rounding so the row sums to one exactly
            let head: f64 = row[..n_states - 1].iter().sum();
            row[n_states - 1] = 1.0 - head;
            transition.extend(row);
        }
        let reward = (0..n_states * n_actions).map(|_| rng.gen_range(0.0..1.0)).collect();
        Self::new(n_states, n_actions, horizon, 0, transition, reward).expect("generated mdp is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mdp: FiniteMdp = toml::from_str(text).map_err(|e| Error::InvalidMdp(e.to_string()))?;
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("mdp serializes")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn root(&self) -> MdpState {
        MdpState {
            state: self.initial_state,
            t: 0,
        }
    }

    /// Next-state distribution for `(s, a)`. Panics on out-of-range indices.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> Reward {
        self.reward[s * self.n_actions + a]
    }

    fn check(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.n_states {
            return Err(Error::IndexOutOfRange {
                index: s,
                limit: self.n_states,
            });
        }
        if a >= self.n_actions {
            return Err(Error::IndexOutOfRange {
                index: a,
                limit: self.n_actions,
            });
        }
        Ok(())
    }

    /// Samples a successor of `(s, a)`; the reward depends only on `(s, a)`.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> Result<(usize, Reward)> {
        self.check(s, a)?;
        let dist = WeightedIndex::new(self.row(s, a)).map_err(|e| Error::InvalidMdp(e.to_string()))?;
        Ok((dist.sample(rng), self.reward(s, a)))
    }
}

impl Environment for FiniteMdp {
    type State = MdpState;

    fn legal_actions(&self, state: &MdpState) -> Vec<ActionId> {
        if state.t >= self.horizon {
            return Vec::new();
        }
        (0..self.n_actions).map(ActionId).collect()
    }

    fn is_terminal(&self, state: &MdpState) -> bool {
        state.t >= self.horizon
    }

    fn seat(&self, _state: &MdpState) -> Seat {
        0
    }

    /// Rewards accrue per step, so nothing is left to collect at the horizon.
    fn terminal_value(&self, state: &MdpState, _perspective: Seat) -> Option<Reward> {
        (state.t >= self.horizon).then_some(0.0)
    }

    fn zero_sum(&self) -> bool {
        false
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &MdpState,
        action: ActionId,
        _perspective: Seat,
        rng: &mut R,
    ) -> Result<(MdpState, Reward)> {
        if state.t >= self.horizon {
            return Err(Error::IllegalMove { action });
        }
        let (next, r) = FiniteMdp::step(self, state.state, action.0, rng)?;
        Ok((
            MdpState {
                state: next,
                t: state.t + 1,
            },
            r,
        ))
    }

    fn default_rollout_depth(&self) -> usize {
        3 * self.horizon
    }
}
