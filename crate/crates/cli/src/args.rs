use std::path::PathBuf;

use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "coupled-rwm",
    version,
    about = "Coupled random-walk Metropolis chains: meeting times, distance traces, drift curves"
)]
pub struct Cli {
    /// Cap on worker threads. Results do not depend on it.
    #[arg(
        long,
        global = true,
        env = "COUPLED_RWM_THREADS",
        value_parser = clap::value_parser!(u64).range(1..)
    )]
    pub threads: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run coupled chains from independent target draws until they meet.
    Meet(MeetArgs),
    /// Average distance between the chains over a fixed horizon.
    Trace(TraceArgs),
    /// Mean one-step change in distance as a function of separation.
    Drift(DriftArgs),
    /// Exact meeting probability of a maximal coupling and its bounds.
    Prob(ProbArgs),
    /// Run the statistical validation suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// JSON configuration file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Single dimension.
    #[arg(long, conflicts_with = "dims", value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    pub dim: Option<usize>,

    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,

    /// Proposal couplings, comma-separated. `maximal` and `all` expand to groups.
    #[arg(long, value_delimiter = ',')]
    pub proposal: Option<Vec<String>>,

    /// Acceptance couplings, comma-separated, or `all`.
    #[arg(long, value_delimiter = ',')]
    pub acceptance: Option<Vec<String>>,

    /// Replications per cell.
    #[arg(long, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    pub reps: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Iteration budget per run; runs that have not met are censored.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub t_max: Option<u64>,

    /// Proposal scale: the step size is ell / sqrt(dim).
    #[arg(long)]
    pub ell: Option<f64>,

    /// Cutoffs for the hybrid coupling, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub hybrid_cutoff: Option<Vec<f64>>,

    /// Coupling used by the hybrid when the chains are far apart.
    #[arg(long)]
    pub hybrid_far: Option<String>,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rejection_cap: Option<u64>,

    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Also render an SVG chart to this path.
    #[arg(long)]
    pub svg: Option<PathBuf>,

    /// Plot the vertical axis on a log scale.
    #[arg(long)]
    pub log_scale: bool,
}

#[derive(Debug, Args)]
pub struct MeetArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,

    /// Number of iterations to follow.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    #[command(flatten)]
    pub common: ExperimentArgs,

    /// Separations to start from, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub r_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ProbArgs {
    /// Evaluate at a single separation instead of a grid.
    #[arg(long)]
    pub r: Option<f64>,

    /// Proposal standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sd: f64,

    /// Largest separation of the grid.
    #[arg(long, default_value_t = 10.0)]
    pub r_max: f64,

    /// Number of grid points, starting at 0.
    #[arg(long, default_value_t = 101, value_parser = RangedU64ValueParser::<usize>::new().range(2..))]
    pub points: usize,

    /// Chernoff parameter in (0, 1/2); by default the bound is minimized over it.
    #[arg(long)]
    pub chernoff_s: Option<f64>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub svg: Option<PathBuf>,

    #[arg(long)]
    pub log_scale: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Only run these groups, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,

    /// Print every check, not only failures.
    #[arg(long, short)]
    pub verbose: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn zero_reps_is_a_usage_error() {
        let err = Cli::try_parse_from(["coupled-rwm", "meet", "--reps", "0"]).unwrap_err();
        assert_eq!(err.kind(), clap::error::ErrorKind::ValueValidation);
    }

    #[test]
    fn lists_split_on_commas() {
        let cli = Cli::try_parse_from([
            "coupled-rwm",
            "meet",
            "--dims",
            "10,20",
            "--proposal",
            "max-reflection,max-independent",
        ])
        .unwrap();
        let Command::Meet(m) = cli.command else {
            panic!()
        };
        assert_eq!(m.common.dims, Some(vec![10, 20]));
        assert_eq!(m.common.proposal.unwrap().len(), 2);
    }
}
