//! `cartan`: decompose unitaries, compute optimal synthesis costs and run
//! the verification suites.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 parse error,
//! 3 precondition (bad input, dimension mismatch, refused sweep), 4 numerical
//! failure, 5 optimizer non-convergence.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cartan_core::metric::DEFAULT_FD_STEP;

#[derive(Parser)]
#[command(name = "cartan", version, about = "Optimal synthesis cost of Cartan control problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Factor a unitary as e^{iL}·e^{iZ}·e^{iM}.
    Decompose(DecomposeArgs),
    /// Optimal synthesis cost of a unitary.
    Cost(CostArgs),
    /// Check the commutation structure of a split and the cost-engine invariants on it.
    VerifySplit(VerifySplitArgs),
    /// Check the block structure of the coordinate Gram matrix.
    VerifyMetric(VerifyMetricArgs),
    /// Numerically optimize control paths for a decreasing sequence of epsilons.
    Sweep(SweepArgs),
    /// Print a Haar-random special unitary.
    Random(RandomArgs),
}

#[derive(Args)]
struct SplitArgs {
    /// Builtin split (single_x, two_local, ai) or a split JSON file.
    #[arg(long, default_value = "ai")]
    split: String,
    /// Number of qubits; inferred from the input matrix when there is one.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Matrix JSON file, or - for stdin.
    #[arg(long, short, default_value = "-")]
    input: String,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, short, default_value = "-")]
    output: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Convention {
    /// Middle generator z·σz with eigenvalues ±z.
    StandardPauli,
    /// Middle generator with eigenvalues ±z/2.
    PaperHalved,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, short, default_value = "-")]
    input: String,
    #[command(flatten)]
    split: SplitArgs,
    /// How the single-qubit angle z is read off the decomposition.
    #[arg(long, value_enum, default_value = "standard-pauli")]
    convention: Convention,
    #[arg(long, short, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct VerifySplitArgs {
    #[command(flatten)]
    split: SplitArgs,
    /// Random samples per randomized check.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, env = "CARTAN_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write a JSON report here (- for stdout; the table then goes to stderr).
    #[arg(long, short)]
    output: Option<String>,
}

#[derive(Args)]
struct VerifyMetricArgs {
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Central-difference step, within [1e-6, 1e-3].
    #[arg(long, default_value_t = DEFAULT_FD_STEP)]
    fd_step: f64,
    /// Random base points in addition to the origin.
    #[arg(long, default_value_t = 5)]
    points: usize,
    #[arg(long, env = "CARTAN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, short, default_value = "-")]
    input: String,
    #[command(flatten)]
    split: SplitArgs,
    /// Strictly descending epsilon values in (0, 1].
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 6)]
    segments: usize,
    #[arg(long, default_value_t = 2)]
    restarts: usize,
    #[arg(long, env = "CARTAN_SEED", default_value_t = 0)]
    seed: u64,
    /// Allow sweeps on SU(4) and larger.
    #[arg(long)]
    slow: bool,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<String>,
    #[arg(long, short, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct RandomArgs {
    /// Number of qubits.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, env = "CARTAN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, short, default_value = "-")]
    output: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Decompose(a) => commands::decompose(a),
        Command::Cost(a) => commands::cost(a),
        Command::VerifySplit(a) => commands::verify_split(a),
        Command::VerifyMetric(a) => commands::verify_metric(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Random(a) => commands::random(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
