//! Seeded head-to-head tournaments between two searchers across rollout budgets.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, EstimatorKind};
use crate::search::{play_game, MovePicker, Outcome, SearchPlayer};
use crate::seeding::derive_seed;

pub const CSV_HEADER: &str = "rollouts,algo_a,algo_b,wins_a,wins_b,draws,win_rate_a,win_rate_b,seed";
pub const DEFAULT_ROLLOUTS: [usize; 5] = [20, 40, 60, 80, 100];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TournamentConfig {
    pub algo_a: EstimatorConfig,
    pub algo_b: EstimatorConfig,
    pub rollout_counts: Vec<usize>,
    pub games_per_setting: usize,
    pub base_seed: u64,
    pub output_path: PathBuf,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        TournamentConfig {
            algo_a: EstimatorConfig::with_kind(EstimatorKind::Dr),
            algo_b: EstimatorConfig::with_kind(EstimatorKind::Mcts),
            rollout_counts: DEFAULT_ROLLOUTS.to_vec(),
            games_per_setting: 100,
            base_seed: 42,
            output_path: PathBuf::from("results.csv"),
        }
    }
}

impl TournamentConfig {
    pub fn validate(&self) -> Result<()> {
        self.algo_a.validate()?;
        self.algo_b.validate()?;
        if self.games_per_setting == 0 {
            return Err(Error::InvalidConfig("games_per_setting must be >= 1".into()));
        }
        if self.rollout_counts.is_empty() || self.rollout_counts.contains(&0) {
            return Err(Error::InvalidConfig(
                "rollout_counts must be non-empty and all >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: TournamentConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Results of one rollout setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentRow {
    pub rollouts: usize,
    pub algo_a: String,
    pub algo_b: String,
    pub wins_a: usize,
    pub wins_b: usize,
    pub draws: usize,
    pub win_rate_a: f64,
    pub win_rate_b: f64,
    pub base_seed: u64,
}

impl TournamentRow {
    pub fn games(&self) -> usize {
        self.wins_a + self.wins_b + self.draws
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.4},{:.4},{}",
            self.rollouts,
            self.algo_a,
            self.algo_b,
            self.wins_a,
            self.wins_b,
            self.draws,
            self.win_rate_a,
            self.win_rate_b,
            self.base_seed
        )
    }
}

/// Algo A plays X in even-numbered games.
pub fn a_plays_x(game: usize) -> bool {
    game.is_multiple_of(2)
}

pub fn game_seed(base_seed: u64, rollouts: usize, game: usize) -> u64 {
    derive_seed(base_seed, &[rollouts as u64, game as u64])
}

/// Winner of one game from algo A's point of view: `Some(true)` if A won.
fn a_won(outcome: Outcome, a_is_x: bool) -> Option<bool> {
    match outcome {
        Outcome::Draw => None,
        Outcome::XWins => Some(a_is_x),
        Outcome::OWins => Some(!a_is_x),
    }
}

/// Plays `games` games between two arbitrary pickers; games run in parallel.
pub fn play_match(
    a: &dyn MovePicker,
    b: &dyn MovePicker,
    rollouts: usize,
    games: usize,
    base_seed: u64,
) -> Result<TournamentRow> {
    let results: Vec<Option<bool>> = (0..games)
        .into_par_iter()
        .map(|i| {
            let a_is_x = a_plays_x(i);
            let (x, o) = if a_is_x { (a, b) } else { (b, a) };
            let record = play_game(x, o, game_seed(base_seed, rollouts, i))?;
            Ok(a_won(record.outcome, a_is_x))
        })
        .collect::<Result<_>>()?;
    let wins_a = results.iter().filter(|r| **r == Some(true)).count();
    let wins_b = results.iter().filter(|r| **r == Some(false)).count();
    let rate = |w: usize| w as f64 / games as f64;
    Ok(TournamentRow {
        rollouts,
        algo_a: a.name(),
        algo_b: b.name(),
        wins_a,
        wins_b,
        draws: games - wins_a - wins_b,
        win_rate_a: rate(wins_a),
        win_rate_b: rate(wins_b),
        base_seed,
    })
}

/// One rollout setting of `config`, without touching the filesystem.
pub fn play_setting(config: &TournamentConfig, rollouts: usize) -> Result<TournamentRow> {
    let a = SearchPlayer::new(config.algo_a, rollouts);
    let b = SearchPlayer::new(config.algo_b, rollouts);
    play_match(&a, &b, rollouts, config.games_per_setting, config.base_seed)
}

/// Plays every setting in order. After each setting the CSV at
/// `config.output_path` is rewritten with the rows so far, so partial results
/// survive an interrupted run.
pub fn run_tournament(config: &TournamentConfig) -> Result<Vec<TournamentRow>> {
    run_tournament_with(config, |_| {})
}

/// [`run_tournament`] with a callback per finished row.
pub fn run_tournament_with<F>(config: &TournamentConfig, mut on_row: F) -> Result<Vec<TournamentRow>>
where
    F: FnMut(&TournamentRow),
{
    config.validate()?;
    let mut rows = Vec::with_capacity(config.rollout_counts.len());
    for &rollouts in &config.rollout_counts {
        let row = play_setting(config, rollouts)?;
        on_row(&row);
        rows.push(row);
        write_results(&rows, &config.output_path, config)?;
    }
    Ok(rows)
}

pub fn render_csv(rows: &[TournamentRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_csv_line());
    }
    out
}

/// Sidecar location for the config: same path with a `.json` extension.
pub fn provenance_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes the CSV and, next to it, the full config as JSON.
pub fn write_results(rows: &[TournamentRow], path: &Path, config: &TournamentConfig) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, render_csv(rows))?;
    std::fs::write(provenance_path(path), config.to_json() + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(wins_a: usize, wins_b: usize, draws: usize) -> TournamentRow {
        let n = (wins_a + wins_b + draws) as f64;
        TournamentRow {
            rollouts: 100,
            algo_a: "dr".into(),
            algo_b: "mcts".into(),
            wins_a,
            wins_b,
            draws,
            win_rate_a: wins_a as f64 / n,
            win_rate_b: wins_b as f64 / n,
            base_seed: 42,
        }
    }

    #[test]
    fn csv_line_format() {
        assert_eq!(row(63, 37, 0).to_csv_line(), "100,dr,mcts,63,37,0,0.6300,0.3700,42");
    }

    #[test]
    fn empty_rows_render_header_only() {
        assert_eq!(render_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn alternation() {
        let xs = (0..7).filter(|&i| a_plays_x(i)).count();
        assert_eq!(xs, 4);
    }

    #[test]
    fn config_validation() {
        let mut c = TournamentConfig::default();
        assert!(c.validate().is_ok());
        c.rollout_counts = vec![];
        assert!(c.validate().is_err());
        c.rollout_counts = vec![10, 0];
        assert!(c.validate().is_err());
        c = TournamentConfig {
            games_per_setting: 0,
            ..TournamentConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_uses_field_names() {
        let text = r#"
            rollout_counts = [5, 10]
            games_per_setting = 4
            base_seed = 9
            output_path = "out/r.csv"

            [algo_a]
            kind = "is"
            beta = 0.25

            [algo_b]
            kind = "mcts"
        "#;
        let c = TournamentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.algo_a.kind, EstimatorKind::StepIs);
        assert_eq!(c.algo_a.beta, 0.25);
        assert_eq!(c.algo_a.tau, 1.0);
        assert_eq!(c.rollout_counts, vec![5, 10]);
        assert_eq!(c.output_path, PathBuf::from("out/r.csv"));
        assert!(TournamentConfig::from_toml_str("games_per_setting = 0").is_err());
        assert!(TournamentConfig::from_toml_str("bogus = [").is_err());
    }

    #[test]
    fn provenance_sits_next_to_the_csv() {
        assert_eq!(provenance_path(Path::new("a/b.csv")), PathBuf::from("a/b.json"));
    }
}
