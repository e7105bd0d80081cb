mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use flexsum::aggregate::{AggregateError, FwVariant};
use flexsum::baseline_homothet::HomothetError;
use flexsum::experiment::ExperimentError;
use flexsum::gpoly::GPolyError;
use flexsum::polytope::PolytopeError;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;

/// Aggregate flexibility of thermostatically controlled loads via
/// g-polymatroid inner approximations.
#[derive(Parser, Debug)]
#[command(name = "flexsum", version, about)]
struct Cli {
    /// Worker threads for per-device and per-trial work.
    #[arg(long, env = "FLEXSUM_JOBS", global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a TCL population and write it as JSON.
    Generate(GenerateArgs),
    /// Recompute the inner approximations of a population.
    Approx(ApproxArgs),
    /// Aggregate a population and tabulate its generating functions.
    Aggregate(AggregateArgs),
    /// Optimize a linear cost with every method.
    Optimize(OptimizeArgs),
    /// Track a reference signal with the g-polymatroid and homothet methods.
    Track(TrackArgs),
    /// Approximation-error benchmark across horizons.
    ApproxError(ApproxErrorArgs),
    /// Run the oracle suites on a population file.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Number of devices.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
    horizon: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sampler configuration JSON; defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    #[arg(long)]
    population: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    #[arg(long)]
    population: PathBuf,
    /// Subsets tabulated when the horizon is too long for the full table.
    #[arg(long, default_value_t = 64)]
    audit_sets: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SenseArg {
    Min,
    Max,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(long)]
    population: PathBuf,
    /// Comma-separated cost vector of length T.
    #[arg(long, conflicts_with = "cost_seed")]
    cost: Option<String>,
    /// Draw the cost uniformly from [0, 1]^T with this seed.
    #[arg(long)]
    cost_seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SenseArg::Min)]
    sense: SenseArg,
    /// Also split the g-polymatroid optimizer into per-device profiles.
    #[arg(long)]
    dispatch: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Vanilla,
    AwaySteps,
    MinNormPoint,
}

impl From<VariantArg> for FwVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Vanilla => FwVariant::Vanilla,
            VariantArg::AwaySteps => FwVariant::AwaySteps,
            VariantArg::MinNormPoint => FwVariant::MinNormPoint,
        }
    }
}

#[derive(Args, Debug)]
struct TrackArgs {
    #[arg(long)]
    population: PathBuf,
    /// Signal CSV with header `t,g_kW`.
    #[arg(long, conflicts_with = "inside")]
    signal: Option<PathBuf>,
    /// Synthesize the signal as the average of this many aggregate vertices.
    #[arg(long)]
    inside: Option<usize>,
    /// Sinusoid amplitude as a fraction of the aggregate's half-range.
    #[arg(long, default_value_t = 0.8)]
    amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    cycles: f64,
    #[arg(long, default_value_t = 0.0)]
    phase: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    gap_tol: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::MinNormPoint)]
    variant: VariantArg,
    /// Per-period CSV; stdout when absent.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Result JSON; defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ApproxErrorArgs {
    /// Take N, seed and sampler ranges from this population file.
    #[arg(long)]
    population: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Comma-separated horizons.
    #[arg(long, default_value = "2,4,6,8,10,12,14,16,18,20,22,24")]
    horizons: String,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-record CSV; stdout when absent.
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Mean/max error per horizon and method.
    #[arg(long)]
    summary_csv: Option<PathBuf>,
    #[arg(long)]
    summary_json: Option<PathBuf>,
    /// Gnuplot script plotting the summary CSV.
    #[arg(long, requires = "summary_csv")]
    gnuplot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    population: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random cost vectors for the greedy suite.
    #[arg(long, default_value_t = 20)]
    greedy_trials: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Approx(a) => commands::approx(a),
        Command::Aggregate(a) => commands::aggregate(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Track(a) => commands::track(a),
        Command::ApproxError(a) => commands::approx_error(a),
        Command::Validate(a) => commands::validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_numerical(&e) { EXIT_NUMERICAL } else { EXIT_USAGE })
        }
    }
}

fn is_numerical(e: &anyhow::Error) -> bool {
    fn polytope(e: &PolytopeError) -> bool {
        matches!(e, PolytopeError::Numerical(_) | PolytopeError::Unbounded)
    }
    fn gpoly(e: &GPolyError) -> bool {
        matches!(e, GPolyError::Polytope(p) if polytope(p))
    }
    fn aggregate(e: &AggregateError) -> bool {
        match e {
            AggregateError::NotConverged(_) => true,
            AggregateError::Polytope(p) => polytope(p),
            AggregateError::GPoly(g) => gpoly(g),
            _ => false,
        }
    }
    fn homothet(e: &HomothetError) -> bool {
        matches!(e, HomothetError::NotContained(_)) || matches!(e, HomothetError::Polytope(p) if polytope(p))
    }
    e.chain().any(|c| {
        c.downcast_ref::<PolytopeError>().is_some_and(polytope)
            || c.downcast_ref::<GPolyError>().is_some_and(gpoly)
            || c.downcast_ref::<AggregateError>().is_some_and(aggregate)
            || c.downcast_ref::<HomothetError>().is_some_and(homothet)
            || c.downcast_ref::<ExperimentError>().is_some_and(|x| match x {
                ExperimentError::Aggregate(a) => aggregate(a),
                ExperimentError::GPoly(g) => gpoly(g),
                ExperimentError::Homothet(h) => homothet(h),
            })
    })
}
