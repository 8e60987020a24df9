//! Experiment orchestration: tournaments between searchers and the
//! estimator validation suites.

mod tournament;
mod validation;

pub use tournament::{
    a_plays_x, game_seed, play_match, play_setting, provenance_path, render_csv, run_tournament, run_tournament_with,
    write_results, TournamentConfig, TournamentRow, CSV_HEADER, DEFAULT_ROLLOUTS,
};
pub use validation::{
    run_validation, Check, Relation, Suite, ValidationReport, EPSILONS, EXACT_TOL, HYBRID_BETA, Z_LIMIT,
};
