mod commands;
mod experiment;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "forkjoin", version, about = "Order-statistic transforms, approximations, bounds and simulation for (n, k) fork-join queues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print W coefficients: one value, one row as CSV, or a whole table.
    Coeff {
        n: usize,
        k: Option<usize>,
        i: Option<usize>,
        /// Directory holding cached tables (`w-<n>.txt`).
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Approximate the mean sojourn time of a non-purging (n, k) queue.
    Approx {
        n: usize,
        k: usize,
        lambda: String,
        mu: String,
        #[arg(long, value_enum, default_value_t = MethodArg::NelsonLt)]
        method: MethodArg,
        /// Exact rational evaluation (the default).
        #[arg(long, conflicts_with = "float")]
        exact: bool,
        /// Double-precision evaluation.
        #[arg(long)]
        float: bool,
    },
    /// Bounds on the mean sojourn time of a purging (n, k) queue, as CSV.
    Bounds { n: usize, k: usize, lambda: String, mu: String },
    /// Simulate one queue and print the result as CSV.
    Simulate(SimulateArgs),
    /// Run a TOML experiment recipe and write its CSV.
    Experiment {
        recipe: PathBuf,
        /// Overrides the recipe's output path; `-` writes to stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check the order-statistic identity on the built-in distributions.
    Verify {
        #[arg(long, default_value_t = 6)]
        max_n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    NelsonLt,
    VarmaLt,
    NelsonBasic,
    VarmaBasic,
}

impl From<MethodArg> for forkjoin::Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::NelsonLt => forkjoin::Method::NelsonLt,
            MethodArg::VarmaLt => forkjoin::Method::VarmaLt,
            MethodArg::NelsonBasic => forkjoin::Method::NelsonBasic,
            MethodArg::VarmaBasic => forkjoin::Method::VarmaBasic,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "non-purging")]
    variant: String,
    #[arg(short)]
    n: usize,
    /// Defaults to n.
    #[arg(short)]
    k: Option<usize>,
    #[arg(long, conflicts_with = "lambda", required_unless_present = "lambda")]
    rho: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long, default_value = "1")]
    mu: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = forkjoin::sim::DEFAULT_TARGET_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = forkjoin::sim::DEFAULT_SAMPLE_RATE)]
    sample_rate: f64,
    /// Jobs discarded before sampling; defaults to ceil(10 n / (1 - rho)).
    #[arg(long)]
    warmup: Option<u64>,
    /// Maximum number of arrivals before giving up.
    #[arg(long)]
    budget: Option<u64>,
    /// exp, det or weibull:<shape>
    #[arg(long, default_value = "exp")]
    service: String,
    /// poisson or det
    #[arg(long, default_value = "poisson")]
    arrival: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Coeff { n, k, i, cache } => commands::coeff(n, k, i, cache.as_deref()),
        Command::Approx { n, k, lambda, mu, method, float, .. } => commands::approx(n, k, &lambda, &mu, method.into(), float),
        Command::Bounds { n, k, lambda, mu } => commands::bounds(n, k, &lambda, &mu),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Experiment { recipe, output } => experiment::run_file(&recipe, output.as_deref()),
        Command::Verify { max_n } => commands::verify(max_n),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("forkjoin: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
