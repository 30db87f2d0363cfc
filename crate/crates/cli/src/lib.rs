//! Library surface of the `equilearn` binary: argument types, file
//! formats, and the subcommand implementations, exposed so integration
//! tests can drive the same code paths directly.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod io;

#[derive(Parser)]
#[command(name = "equilearn", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the multi-scale MWU dynamics and write trace, regret, and
    /// summary files.
    RunDynamics(RunDynamicsArgs),
    /// Check a strategy mixture against an equilibrium notion.
    CheckEq(CheckEqArgs),
    /// Extract an approximate equilibrium from a rank-T mixture of the
    /// repeated game.
    Reduction(ReductionArgs),
    /// Reproduce the counterexample where behaviorizing a rank-2
    /// correlated equilibrium creates a large swap gain.
    AppendixA(DemoArgs),
    /// Time the main code paths on a fixed workload.
    Bench,
}

#[derive(clap::Args)]
pub struct RunDynamicsArgs {
    /// Game description (JSON).
    #[arg(long)]
    pub game: PathBuf,
    /// Target accuracy in (0, 1].
    #[arg(long)]
    pub eps: f64,
    /// Root seed of the run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the rounds-per-restart H (needs --L as well).
    #[arg(long = "H")]
    pub rounds_per_block: Option<usize>,
    /// Override the thread count L (needs --H as well).
    #[arg(long = "L")]
    pub threads: Option<usize>,
    /// Reward evaluation: "exact" or "sampled:N".
    #[arg(long, default_value = "exact")]
    pub reward_mode: String,
    /// Exit with code 2 if any regret bound is violated.
    #[arg(long)]
    pub assert_bounds: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Testing hook: cripple the learners (negative control for
    /// --assert-bounds).
    #[arg(long, hide = true)]
    pub corrupt_mwu: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CheckNotion {
    EveryType,
    ExAnte,
}

#[derive(clap::Args)]
pub struct CheckEqArgs {
    /// Game description (JSON).
    #[arg(long)]
    pub game: PathBuf,
    /// Strategy mixture to check (JSON, uniform mixture of products).
    #[arg(long)]
    pub mu: PathBuf,
    /// Tolerated deviation gain.
    #[arg(long)]
    pub eps: f64,
    /// Equilibrium notion.
    #[arg(long, value_enum, default_value = "every-type")]
    pub notion: CheckNotion,
}

#[derive(clap::Args)]
pub struct ReductionArgs {
    /// Game description (JSON, two players).
    #[arg(long)]
    pub game: PathBuf,
    /// Rank-T mixture of the repeated game (JSON).
    #[arg(long)]
    pub mu: PathBuf,
    /// Repetition count H of the repeated game.
    #[arg(long = "H")]
    pub repetitions: usize,
    /// Accuracy parameter; the extraction threshold is 16·eps.
    #[arg(long)]
    pub eps: f64,
    /// Assert the rank of the mixture file.
    #[arg(long = "T-rank")]
    pub t_rank: Option<usize>,
    /// Maximum number of gadgets visited.
    #[arg(long, default_value_t = 1024)]
    pub budget: usize,
    /// Rollouts for the referee deviation estimate.
    #[arg(long, default_value_t = 200)]
    pub rollouts: usize,
    /// Root seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct DemoArgs {
    /// Number of types of the acting player.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
}
