use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use drmcts::harness::{self, Suite, TournamentConfig};
use drmcts::{EstimatorConfig, EstimatorKind};

#[derive(Parser)]
#[command(
    name = "drmcts",
    version,
    about = "Doubly robust MCTS: tournaments and estimator validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play algo A against algo B on Tic-Tac-Toe at each rollout budget.
    Tournament(TournamentArgs),
    /// Run estimator validation suites on the reference MDP.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct TournamentArgs {
    /// TOML file with TournamentConfig fields; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_name = "mcts|is|dr")]
    algo_a: Option<EstimatorKind>,
    #[arg(long, value_name = "mcts|is|dr")]
    algo_b: Option<EstimatorKind>,
    /// Comma-separated iterations per move.
    #[arg(long, value_delimiter = ',')]
    rollouts: Option<Vec<usize>>,
    #[arg(long)]
    games: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kfolds: Option<usize>,
    /// Clip on cumulative importance ratios.
    #[arg(long, conflicts_with = "no_clip")]
    rho_clip: Option<f64>,
    #[arg(long)]
    no_clip: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Comma-separated suites: unbiasedness, variance, collapse.
    #[arg(long, value_delimiter = ',', required = true)]
    suite: Vec<Suite>,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Print reports as JSON.
    #[arg(long)]
    json: bool,
}

impl TournamentArgs {
    fn apply_shared(&self, algo: &mut EstimatorConfig) {
        if let Some(v) = self.beta {
            algo.beta = v;
        }
        if let Some(v) = self.tau {
            algo.tau = v;
        }
        if let Some(v) = self.c {
            algo.c = v;
        }
        if let Some(v) = self.lambda {
            algo.lambda = v;
        }
        if let Some(v) = self.kfolds {
            algo.k_folds = v;
        }
        if let Some(v) = self.rho_clip {
            algo.rho_clip = Some(v);
        }
        if self.no_clip {
            algo.rho_clip = None;
        }
    }

    fn resolve(&self) -> Result<TournamentConfig> {
        let mut config = match &self.config {
            Some(path) => TournamentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => TournamentConfig::default(),
        };
        if let Some(kind) = self.algo_a {
            config.algo_a.kind = kind;
        }
        if let Some(kind) = self.algo_b {
            config.algo_b.kind = kind;
        }
        self.apply_shared(&mut config.algo_a);
        self.apply_shared(&mut config.algo_b);
        if let Some(r) = &self.rollouts {
            config.rollout_counts = r.clone();
        }
        if let Some(g) = self.games {
            config.games_per_setting = g;
        }
        if let Some(s) = self.seed {
            config.base_seed = s;
        }
        if let Some(out) = &self.out {
            config.output_path = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

fn tournament(args: &TournamentArgs) -> Result<bool> {
    let config = args.resolve()?;
    println!("{}", harness::CSV_HEADER);
    harness::run_tournament_with(&config, |row| println!("{}", row.to_csv_line()))
        .with_context(|| format!("writing {}", config.output_path.display()))?;
    eprintln!(
        "wrote {} and {}",
        config.output_path.display(),
        harness::provenance_path(&config.output_path).display()
    );
    Ok(true)
}

fn validate(args: &ValidateArgs) -> Result<bool> {
    let mut all_passed = true;
    for &suite in &args.suite {
        let report = harness::run_validation(suite, args.samples, args.seed)?;
        if args.json {
            println!("{}", report.to_json());
        } else {
            println!("{report}");
        }
        all_passed &= report.passed();
    }
    Ok(all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Tournament(args) => tournament(args),
        Command::Validate(args) => validate(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
