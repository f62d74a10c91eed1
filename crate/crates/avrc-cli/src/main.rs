//! Experiment harness: dataset simulation, model clustering, error curves
//! over every cluster count, closed-form/Monte-Carlo comparisons and
//! forecasting-feature construction.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use avrc_core::clustering::Method;
use avrc_core::synth::TestPredictors;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "avrc", version, about = "Aggregate value regression with model clustering")]
struct Cli {
    /// Worker threads (falls back to the AVRC_THREADS environment variable,
    /// then to the logical CPU count). Outputs are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Tem,
    Rcm,
}

impl From<MethodArg> for Method {
    fn from(value: MethodArg) -> Self {
        match value {
            MethodArg::Tem => Method::Tem,
            MethodArg::Rcm => Method::Rcm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TestPredictorArg {
    Fresh,
    Shared,
}

impl From<TestPredictorArg> for TestPredictors {
    fn from(value: TestPredictorArg) -> Self {
        match value {
            TestPredictorArg::Fresh => TestPredictors::Fresh,
            TestPredictorArg::Shared => TestPredictors::Shared,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as per-model CSV files.
    Simulate(SimulateArgs),
    /// Cluster a simulated dataset and write the merge trace.
    Cluster(ClusterArgs),
    /// Replicate: generate, cluster, and record train/test errors at every k.
    Curve(CurveArgs),
    /// Compare closed-form expected errors against Monte Carlo estimates.
    Theory(TheoryArgs),
    /// Build forecasting design matrices from a demand panel.
    Features(FeaturesArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Dataset configuration (JSON).
    #[arg(long)]
    pub(crate) config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub(crate) out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    pub(crate) seed: Option<u64>,
}

#[derive(Args)]
pub struct ClusterArgs {
    /// Directory written by `simulate`.
    #[arg(long)]
    pub(crate) data: PathBuf,
    #[arg(long, value_enum)]
    pub(crate) method: MethodArg,
    #[arg(long)]
    pub(crate) out: PathBuf,
}

#[derive(Args)]
pub struct CurveArgs {
    /// Dataset configuration (JSON).
    #[arg(long)]
    pub(crate) config: PathBuf,
    #[arg(long, value_enum)]
    pub(crate) method: MethodArg,
    /// Independent replicates; replicate r is seeded from (seed, r).
    #[arg(long, default_value_t = 1)]
    pub(crate) reps: usize,
    #[arg(long)]
    pub(crate) out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    /// Override how test predictors relate to training predictors.
    #[arg(long, value_enum)]
    pub(crate) test_predictors: Option<TestPredictorArg>,
}

#[derive(Args)]
pub struct TheoryArgs {
    /// Three-model instance description (JSON).
    #[arg(long)]
    pub(crate) instance: PathBuf,
    /// Monte Carlo replicates per quantity.
    #[arg(long, default_value_t = 10_000)]
    pub(crate) reps: usize,
    #[arg(long)]
    pub(crate) out: PathBuf,
    /// Monte Carlo seed (the instance seed only shapes the designs).
    #[arg(long, default_value_t = 0)]
    pub(crate) seed: u64,
}

#[derive(Args)]
pub struct FeaturesArgs {
    /// Demand panel CSV: date,interval,unit_id,value.
    #[arg(long)]
    pub(crate) panel: PathBuf,
    /// Daily covariate CSV: date,area,temperature.
    #[arg(long)]
    pub(crate) temps: PathBuf,
    /// Unit metadata CSV: unit_id,area,category.
    #[arg(long)]
    pub(crate) units: PathBuf,
    /// Optional holiday list CSV: date.
    #[arg(long)]
    pub(crate) holidays: Option<PathBuf>,
    #[arg(long)]
    pub(crate) out: PathBuf,
    /// Daily lags per unit.
    #[arg(long, default_value_t = 7)]
    pub(crate) lags: usize,
    /// Temperature basis functions.
    #[arg(long, default_value_t = 5)]
    pub(crate) temp_basis: usize,
    /// Cyclic interval basis functions.
    #[arg(long, default_value_t = 5)]
    pub(crate) cyclic_basis: usize,
    /// Intervals per day.
    #[arg(long, default_value_t = 24)]
    pub(crate) intervals: usize,
    /// Spline degree for both bases.
    #[arg(long, default_value_t = 3)]
    pub(crate) degree: usize,
}

fn exit_code_for(err: &avrc_core::Error) -> u8 {
    use avrc_core::Error::*;
    match err {
        Config(_) => 2,
        Data(_) | Dimension { .. } | NonFinite(_) | Contract { .. } | Io(_) => 3,
        RankDeficient { .. } | NotPsd(_) | Numerical(_) => 4,
    }
}

fn resolve_threads(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("AVRC_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let run = || -> avrc_core::Result<()> {
        match &cli.command {
            Command::Simulate(args) => commands::simulate::run(args),
            Command::Cluster(args) => commands::cluster::run(args),
            Command::Curve(args) => commands::curve::run(args),
            Command::Theory(args) => commands::theory::run(args),
            Command::Features(args) => commands::features::run(args),
        }
    };

    let outcome = match resolve_threads(cli.threads) {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| avrc_core::Error::Config(format!("thread pool: {e}")));
            match pool {
                Ok(pool) => pool.install(run),
                Err(e) => Err(e),
            }
        }
        None => run(),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
