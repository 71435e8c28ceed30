use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrace::Variant;

#[derive(Debug, Parser)]
#[command(
    name = "qrace",
    version,
    about = "Equilibria, bounds and simulations of quantum search races"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Exit with status 1 when a bound fails or is inapplicable.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Report analytic quantities for races over the strategy cap instead of failing,
    /// and skip simulation in sweeps.
    #[arg(long, global = true)]
    pub analytic_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Game {
    Stingy,
    #[value(alias = "tie-splitting")]
    Quantum,
}

impl Game {
    pub fn variant(self) -> Variant {
        match self {
            Game::Stingy => Variant::Stingy,
            Game::Quantum => Variant::TieSplitting,
        }
    }
}

/// Where the success probabilities come from. At most one may be given.
#[derive(Debug, Clone, Default, Args)]
#[group(id = "source", multiple = false)]
pub struct ScheduleSource {
    /// Grover race over a search space of N items; scientific notation is accepted.
    #[arg(long = "grover-N", value_name = "N")]
    pub grover_n: Option<f64>,

    /// Comma-separated success probabilities.
    #[arg(long, value_delimiter = ',', value_name = "P,...")]
    pub probs: Option<Vec<f64>>,

    /// JSON `{"probs": [...]}` or one-column CSV; `-` reads stdin.
    #[arg(long, value_name = "PATH")]
    pub schedule_file: Option<PathBuf>,
}

fn count(s: &str) -> Result<u64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64) {
        return Err(format!("{s} is not a nonnegative integer"));
    }
    Ok(v as u64)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a schedule as JSON or CSV.
    Schedule {
        #[command(flatten)]
        source: ScheduleSource,
    },
    /// Coinciding equilibrium of a two-player stingy race, with its bound checks.
    Solve2 {
        #[command(flatten)]
        source: ScheduleSource,
        /// Column player's schedule file, for asymmetric races.
        #[arg(long, value_name = "PATH", conflicts_with = "col_probs")]
        col_schedule_file: Option<PathBuf>,
        /// Column player's probabilities, for asymmetric races.
        #[arg(long, value_delimiter = ',', value_name = "P,...")]
        col_probs: Option<Vec<f64>>,
    },
    /// Coinciding equilibrium of the n-player stingy race.
    Solven {
        #[command(flatten)]
        source: ScheduleSource,
        /// Number of players; a list gives one CSV row each.
        #[arg(long, short = 'n', value_delimiter = ',', default_value = "3")]
        players: Vec<usize>,
    },
    /// Alternating equilibrium of a symmetric two-player stingy race.
    Alternating {
        #[command(flatten)]
        source: ScheduleSource,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Alternating-coinciding equilibria of a symmetric two-player stingy race.
    Altcoinc {
        #[command(flatten)]
        source: ScheduleSource,
        /// Evaluate this start only (needs --change).
        #[arg(long, requires = "change")]
        start: Option<usize>,
        /// Evaluate this change point only (needs --start).
        #[arg(long, requires = "start")]
        change: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Best-response check of a strategy profile.
    Verify {
        #[command(flatten)]
        source: ScheduleSource,
        /// Row player's payoff matrix as CSV, for arbitrary bimatrix games.
        #[arg(long, value_name = "PATH", requires = "col_matrix", conflicts_with = "source")]
        row_matrix: Option<PathBuf>,
        /// Column player's payoff matrix as CSV.
        #[arg(long, value_name = "PATH", requires = "row_matrix")]
        col_matrix: Option<PathBuf>,
        /// Race whose equilibrium is used when no profile is given.
        #[arg(long, value_enum, default_value_t = Game::Stingy)]
        game: Game,
        /// Race in which the profile is checked; defaults to --game.
        #[arg(long, value_enum)]
        against: Option<Game>,
        /// Profile JSON `{"players":[{"weights":[...]}, ...]}` or a solution document.
        #[arg(long, value_name = "PATH")]
        profile: Option<PathBuf>,
        #[arg(long, short = 'n', default_value_t = 2)]
        players: usize,
        #[arg(long, default_value_t = 1e-10)]
        tolerance: f64,
    },
    /// Payoff, collision and start bounds plus the dual payoff ceiling.
    Bound {
        #[command(flatten)]
        source: ScheduleSource,
        /// Player counts for the multiplayer bounds.
        #[arg(long, short = 'n', value_delimiter = ',', default_value = "2")]
        players: Vec<usize>,
        /// Thresholds between the ceiling and 1/2 at which certificates are also built.
        #[arg(long, default_value_t = qrace::constants::DUAL_GRID_POINTS)]
        grid: usize,
    },
    /// Monte Carlo simulation of a race, or a fork-rate sweep over search spaces.
    Simulate {
        #[command(flatten)]
        source: ScheduleSource,
        /// Sweep these Grover search spaces instead of simulating one race.
        #[arg(long = "sweep-N", value_delimiter = ',', value_name = "N,...", conflicts_with = "source")]
        sweep_n: Option<Vec<f64>>,
        #[arg(long, short = 'n', value_delimiter = ',', default_value = "2")]
        players: Vec<usize>,
        #[arg(long, value_parser = count, default_value = "100000")]
        trials: u64,
        /// Seed of the trial generator; drawn from the clock when absent.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Game::Stingy)]
        variant: Game,
        /// Profile JSON; the stingy equilibrium is simulated when absent.
        #[arg(long, value_name = "PATH")]
        profile: Option<PathBuf>,
    },
    /// Analytic report for a Bitcoin-sized race.
    Bitcoin {
        #[arg(long)]
        difficulty: f64,
        #[arg(long, short = 'n', value_delimiter = ',', default_value = "2")]
        players: Vec<usize>,
    },
}
