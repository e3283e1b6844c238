//! `cwwr`: command-line front end for the mean-field Widom-Rowlinson model.
//!
//! Exit codes: 0 success, 2 usage, 3 numerical failure (including failed
//! oracle checks), 4 I/O.

mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Environment variable that caps the worker thread count.
pub const THREADS_ENV: &str = "CWWR_THREADS";

#[derive(Parser)]
#[command(name = "cwwr", version, about = "Mean-field Widom-Rowlinson phase diagram, equations of state and finite-volume checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a point (a, mu0, mu1) and print its phases.
    Classify(ClassifyArgs),
    /// Scan a rectangle of (mu0, mu1) at fixed a.
    PhaseDiagram(PhaseDiagramArgs),
    /// One-component isotherm p_hat(rho) with the plateau inserted.
    Isotherm(IsothermArgs),
    /// Symmetric order parameter and coexisting densities along mu0 = mu1 = mu.
    OrderParameter(OrderParameterArgs),
    /// Compare thermodynamic-limit formulas against exact finite-volume sums.
    OracleCheck(OracleCheckArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ClassifyFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Suite {
    #[value(name = "identity-4a")]
    Identity4a,
    #[value(name = "identity-20")]
    Identity20,
    Convergence,
    Moments,
}

#[derive(clap::Args)]
pub struct ClassifyArgs {
    /// Coupling a >= 0.
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu1: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ClassifyFormat,
    /// Membership tolerance for the critical point and the coexistence
    /// half-line; both are exact-equality sets and are tested as
    /// |mu0 - mu1| <= tol and |mean mu - (1 - ln a)| <= tol.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct PhaseDiagramArgs {
    /// Coupling a > 0.
    #[arg(long)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    pub mu0_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 4.0)]
    pub mu0_max: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    pub mu1_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 4.0)]
    pub mu1_max: f64,
    /// Grid points along mu0 (at least 2).
    #[arg(long, default_value_t = 101)]
    pub mu0_steps: usize,
    /// Grid points along mu1 (at least 2).
    #[arg(long, default_value_t = 101)]
    pub mu1_steps: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    /// Membership tolerance for C and M, as for `classify`.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct IsothermArgs {
    #[arg(long)]
    pub a: f64,
    /// Activity theta > 0; a plateau appears for theta > e/a.
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub rho_min: f64,
    #[arg(long)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct OrderParameterArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct OracleCheckArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Volumes to check, comma separated; each suite has its own default.
    #[arg(long, value_delimiter = ',')]
    pub volumes: Vec<f64>,
    /// Replaces the suite's acceptance tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Why a run stopped; each variant maps to one exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
    ChecksFailed(usize),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) | Failure::ChecksFailed(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl From<cwwr::Error> for Failure {
    fn from(e: cwwr::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Classify(args) => commands::classify(&args),
        Command::PhaseDiagram(args) => commands::phase_diagram(&args),
        Command::Isotherm(args) => commands::isotherm(&args),
        Command::OrderParameter(args) => commands::order_parameter(&args),
        Command::OracleCheck(args) => commands::oracle_check(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Numerical(msg) => eprintln!("numerical failure: {msg}"),
                Failure::Io(msg) => eprintln!("i/o error: {msg}"),
                Failure::ChecksFailed(n) => eprintln!("{n} oracle check(s) failed"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
