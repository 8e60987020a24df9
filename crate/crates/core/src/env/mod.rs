//! Environment contract shared by the search, plus the two concrete
//! environments: Tic-Tac-Toe and a small enumerable finite-horizon MDP.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub mod mdp;
pub mod tictactoe;

pub use mdp::{FiniteMdp, MdpState};
pub use tictactoe::{Cell, GameState, Player, TicTacToe};

/// Index of an action: a board cell for Tic-Tac-Toe, an abstract action for the MDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for ActionId {
    fn from(i: usize) -> Self {
        ActionId(i)
    }
}

/// Unitless return on the `[0, 1]` scale for games, arbitrary reals for MDPs.
pub type Reward = f64;

/// Seat of the agent that acts in a state. Single-agent environments only use seat 0.
pub type Seat = usize;

pub trait Environment: Sync {
    type State: Clone + fmt::Debug + Send + Sync;

    /// Legal actions in ascending index order; empty for terminal states.
    fn legal_actions(&self, state: &Self::State) -> Vec<ActionId>;

    fn is_terminal(&self, state: &Self::State) -> bool;

    fn seat(&self, state: &Self::State) -> Seat;

    /// Value of a terminal state for `perspective`; `None` while play continues.
    fn terminal_value(&self, state: &Self::State, perspective: Seat) -> Option<Reward>;

    /// Two-player zero-sum on the `[0, 1]` scale: the other seat's value is `1 - v`.
    fn zero_sum(&self) -> bool;

    /// Applies `action`, returning the successor and the transition reward as
    /// seen by `perspective`.
    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: ActionId,
        perspective: Seat,
        rng: &mut R,
    ) -> Result<(Self::State, Reward)>;

    /// Safety cap on rollout length.
    fn default_rollout_depth(&self) -> usize;
}
