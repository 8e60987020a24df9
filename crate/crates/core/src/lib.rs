//! Doubly robust Monte Carlo tree search.
//!
//! The crate provides a PUCT tree search whose backed-up values come from one
//! of three estimators: the plain rollout return, per-decision importance
//! sampling, or a hybrid of the rollout return with a doubly robust estimate
//! built from the tree's own statistics. Around it sit a Tic-Tac-Toe
//! environment, a small finite MDP with exact dynamic-programming values for
//! checking the estimators, and a tournament/validation harness.

pub mod env;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod oracle;
pub mod policy;
pub mod search;
pub mod seeding;
pub mod tree;

pub use env::{ActionId, Environment, FiniteMdp, GameState, MdpState, Player, TicTacToe};
pub use error::{Error, Result};
pub use estimators::{EstimatorConfig, EstimatorKind, Trajectory, TrajectoryStep};
pub use search::{play_game, run_search, simulate, Outcome, Search, SearchBudget, SearchPlayer, SearchResult};
pub use tree::{HistoryKey, Tree, TreeNode};
