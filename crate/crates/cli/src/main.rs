//! `qfridge`: steady states, witnesses, cooling optimization and sweeps.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 numerical
//! or solver error, 3 I/O error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qfridge::FridgeError;

#[derive(Parser, Debug)]
#[command(name = "qfridge", version, about = "Three-qubit absorption refrigerator toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the stationary state and its heat currents.
    Steady(SteadyArgs),
    /// Evaluate entanglement witnesses and separability certificates.
    Witness(WitnessArgs),
    /// Best cooling with and without the separability constraint.
    Optimize(OptimizeArgs),
    /// Grid sweeps, the concurrence collapse and the regime table.
    Sweep(SweepArgs),
}

/// Refrigerator parameters; each flag overrides the `--params` file.
#[derive(Args, Debug, Default, Clone)]
pub struct ParamFlags {
    /// JSON file with keys E1, E3, g, p, T.
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long, alias = "E1")]
    pub e1: Option<f64>,
    #[arg(long, alias = "E3")]
    pub e3: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub p2: Option<f64>,
    #[arg(long)]
    pub p3: Option<f64>,
    #[arg(long, alias = "TC")]
    pub tc: Option<f64>,
    #[arg(long, alias = "TR")]
    pub tr: Option<f64>,
    #[arg(long, alias = "TH")]
    pub th: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SteadyArgs {
    #[command(flatten)]
    pub params: ParamFlags,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args, Debug)]
pub struct WitnessArgs {
    #[command(flatten)]
    pub params: ParamFlags,
    /// Density matrix JSON ({"dim":8,"re":[[..]],"im":[[..]]}) instead of a solve.
    #[arg(long, conflicts_with = "ghz_noise")]
    pub rho: Option<String>,
    /// Use p|GHZ><GHZ| + (1-p)I/8 as the input state.
    #[arg(long)]
    pub ghz_noise: Option<f64>,
    /// Random X-form perturbations per radius for the biseparable-ball probe (0 disables it).
    #[arg(long, default_value_t = 0)]
    pub probe_trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<String>,
}

/// Search box and fixed cold-side data; each flag overrides the `--params` file.
#[derive(Args, Debug, Default, Clone)]
pub struct ProblemFlags {
    /// JSON file with any of the keys below.
    #[arg(long)]
    pub params: Option<String>,
    #[arg(long, alias = "E1")]
    pub e1: Option<f64>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long, alias = "TC")]
    pub tc: Option<f64>,
    #[arg(long, alias = "TR")]
    pub tr: Option<f64>,
    #[arg(long, alias = "TH")]
    pub th: Option<f64>,
    /// Upper bound shared by p2, p3 and g.
    #[arg(long)]
    pub bound: Option<f64>,
    #[arg(long)]
    pub e3_min: Option<f64>,
    #[arg(long)]
    pub e3_max: Option<f64>,
    /// Lower bound of p2, p3 and g as a fraction of the upper bound.
    #[arg(long)]
    pub rate_floor: Option<f64>,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub problem: ProblemFlags,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args, Debug)]
#[group(id = "kind", required = true, multiple = false)]
pub struct SweepKind {
    /// TR x TH grid of optimal fridges.
    #[arg(long)]
    pub fig2: bool,
    /// Fixed-TH slices and the ζ(C) collapse.
    #[arg(long)]
    pub fig3: bool,
    /// The four entanglement regimes.
    #[arg(long)]
    pub table1: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub kind: SweepKind,
    #[command(flatten)]
    pub problem: ProblemFlags,
    /// Grid points per axis.
    #[arg(long)]
    pub res: Option<usize>,
    /// Comma-separated TH values for --fig3.
    #[arg(long, value_delimiter = ',')]
    pub slices: Option<Vec<f64>>,
    #[arg(long)]
    pub tr_min: Option<f64>,
    #[arg(long)]
    pub tr_max: Option<f64>,
    #[arg(long)]
    pub th_min: Option<f64>,
    #[arg(long)]
    pub th_max: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for grid cells; defaults to the available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: String,
}

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<FridgeError> for CliError {
    fn from(e: FridgeError) -> Self {
        match e {
            FridgeError::InvalidParams(_)
            | FridgeError::InvalidQubit(_)
            | FridgeError::Format(_)
            | FridgeError::DimensionMismatch { .. }
            | FridgeError::NotSquare { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Steady(a) => commands::steady(a),
        Command::Witness(a) => commands::witness(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
