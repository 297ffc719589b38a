//! Flags, the optional configuration file, and their merge.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "bpcs", version, about = "Stochastic team routing with worker regrouping")]
pub struct Cli {
    /// TOML file with defaults for any flag; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an instance file.
    Generate(GenerateArgs),
    /// Solve an instance and write the plan.
    Solve(SolveArgs),
    /// Plan with one travel-time mode and simulate the plan.
    Simulate(SimulateArgs),
    /// Plan with every travel-time mode and compare them on common scenarios.
    Compare(CompareArgs),
    /// Find the scenario count at which simulated objectives stabilize.
    Saa(SaaArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Planning horizon in minutes: 60, 90 or 120.
    #[arg(long)]
    pub horizon: Option<u32>,
    /// Flights per hour: 10, 20 or 30.
    #[arg(long)]
    pub fph: Option<u32>,
    /// Worker strength in [0.1, 0.9].
    #[arg(long)]
    pub strength: Option<f64>,
    /// Team modes: i, sf or sif.
    #[arg(long)]
    pub modes: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct SolverArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// full, basic, no-cgc, no-drmp or no-branching.
    #[arg(long)]
    pub features: Option<String>,
    /// Seconds; 0 disables the limit.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Override the instance's service level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Override the instance's workforce quantile.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Pricing worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Accepted so one flag set serves every subcommand; the solver draws
    /// no random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Solution JSON; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Search statistics CSV.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Wall-clock timings CSV.
    #[arg(long)]
    pub timings: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulationArgs {
    #[arg(long)]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bin lookup during execution: actual or median.
    #[arg(long)]
    pub bins: Option<String>,
    /// Table CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Lateness histogram CSV.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimulationArgs,
    /// stochastic, best, mean, median or worst.
    #[arg(long)]
    pub mode: Option<String>,
    /// Also write the simulated plan.
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub sim: SimulationArgs,
    /// Scenarios solved with perfect information for EVPI.
    #[arg(long)]
    pub pi_scenarios: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SaaArgs {
    /// Instance files; repeat the flag for several.
    #[arg(long = "instance", required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long)]
    pub time_limit: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest scenario count tried.
    #[arg(long)]
    pub max_scenarios: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Keys of the configuration file, named like the flags.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub features: Option<String>,
    pub time_limit: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub scenarios: Option<usize>,
    pub pi_scenarios: Option<usize>,
    pub bins: Option<String>,
    pub mode: Option<String>,
    pub max_scenarios: Option<usize>,
    pub horizon: Option<u32>,
    pub fph: Option<u32>,
    pub strength: Option<f64>,
    pub modes: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
