//! Ground truth for tests and validation: exact Tic-Tac-Toe minimax, exact
//! policy evaluation on a finite MDP, and Monte Carlo benches that measure
//! estimator bias and variance against those exact values.

mod bench;
mod dp;
mod minimax;
mod stats;
mod templates;

pub use bench::{
    measure_estimator, Bench, ExactMoments, ModelRegime, PlugInModel, DEFAULT_BEHAVIOR_ROW, DEFAULT_MDP_SEED,
    DEFAULT_TARGET_ROW, MIN_BENCH_SAMPLES,
};
pub use dp::{dp_evaluate, DpValueTable};
pub use minimax::{minimax_value, FirstLegalPlayer, MinimaxPlayer, MinimaxValue, Solver};
pub use stats::{Accumulator, EstimatorStats};
pub use templates::{one_move_block_templates, one_move_win_templates, Template};
