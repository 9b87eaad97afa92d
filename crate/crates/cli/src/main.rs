//! `mgpd`: simulate, evaluate, convert, threshold, fit and diagnose
//! multivariate generalized Pareto models over CSV and JSON.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mgpd::error::ErrorClass;

#[derive(Parser)]
#[command(name = "mgpd", version, about = "Multivariate generalized Pareto models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a batch; writes OUT (CSV) and OUT with a .json extension (sidecar).
    Simulate(SimulateArgs),
    /// Keep rows exceeding a threshold somewhere and shift them by it.
    Excess(ExcessArgs),
    /// Evaluate the GP cdf at points.
    Eval(EvalArgs),
    /// Map GEV parameters to the GP law of their threshold excesses.
    Convert(ConvertArgs),
    /// Maximum likelihood fit of a parametric GP family.
    Fit(FitArgs),
    /// Exceedance constancy table {p, empirical, p l(1)}.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model JSON (file path or inline); a bare GpParams object is accepted.
    #[arg(long, required_unless_present = "from_sidecar")]
    model: Option<String>,
    /// Rerun the batch described by a sidecar; --seed and --n override it.
    #[arg(long, conflicts_with = "model")]
    from_sidecar: Option<PathBuf>,
    #[arg(long, required_unless_present = "from_sidecar")]
    seed: Option<u64>,
    #[arg(long, required_unless_present = "from_sidecar")]
    n: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExcessArgs {
    #[arg(long)]
    input: PathBuf,
    /// Thresholds, comma separated, or one value for every column; `-inf`
    /// keeps a column unthresholded.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    u: Vec<f64>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: String,
    /// A point, comma separated; repeat for several.
    #[arg(long = "x", allow_hyphen_values = true)]
    points: Vec<String>,
    /// CSV of points (rows), in addition to --x.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args)]
struct McArgs {
    /// Seed for extracting (pi, l) from a spectral model.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100_000)]
    n_mc: usize,
}

#[derive(Args)]
struct ConvertArgs {
    /// GEV parameters JSON (file path or inline).
    #[arg(long)]
    gev: String,
    /// Move along the orbit of GEV parameters with the same GP law first.
    #[arg(long)]
    orbit: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Univariate,
    Logistic,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Initial natural parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    init: Option<Vec<f64>>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    ftol: Option<f64>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: String,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1")]
    p: Vec<f64>,
    /// Emit CSV instead of JSON.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    mc: McArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Excess(a) => commands::excess(a),
        Command::Eval(a) => commands::eval(a),
        Command::Convert(a) => commands::convert(a),
        Command::Fit(a) => commands::fit(a),
        Command::Diagnose(a) => commands::diagnose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Domain => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}
