//! `ostf`: generate ensembles of periodic Euler fields and analyse them.

mod analyze;
mod generate;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "ostf",
    version,
    about = "Statistical-solution diagnostics for periodic Euler ensembles"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "OSTF_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated ensemble to a container file.
    Generate(GenerateArgs),
    /// Run one analysis on a container.
    Analyze {
        #[command(subcommand)]
        analysis: Analysis,
    },
    #[command(flatten)]
    Direct(Analysis),
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    /// Correlation-measure axioms and diagonal continuity.
    Validate(AnalyzeArgs),
    /// Velocity structure function d_ε^q with fitted exponent.
    Structure(AnalyzeArgs),
    /// Velocity (q = 2, 3) and pressure (q = 3/2) diagonal-continuity moduli.
    MixedDc(AnalyzeArgs),
    /// Onsager indicator from the q = 3 structure function.
    Onsager(AnalyzeArgs),
    /// Mollified dissipation ladder and verdict.
    Dissipation(AnalyzeArgs),
    /// Five-term regularized energy balance per rung.
    Balance(AnalyzeArgs),
    /// Weak-form residuals of the k = 1, 2 hierarchy and the divergence constraint.
    Residuals(AnalyzeArgs),
    /// Global energy per snapshot and the local energy residual series.
    Energy(AnalyzeArgs),
}

impl Analysis {
    fn name(&self) -> &'static str {
        match self {
            Analysis::Validate(_) => "validate",
            Analysis::Structure(_) => "structure",
            Analysis::MixedDc(_) => "mixed-dc",
            Analysis::Onsager(_) => "onsager",
            Analysis::Dissipation(_) => "dissipation",
            Analysis::Balance(_) => "balance",
            Analysis::Residuals(_) => "residuals",
            Analysis::Energy(_) => "energy",
        }
    }

    fn args(&self) -> &AnalyzeArgs {
        match self {
            Analysis::Validate(a)
            | Analysis::Structure(a)
            | Analysis::MixedDc(a)
            | Analysis::Onsager(a)
            | Analysis::Dissipation(a)
            | Analysis::Balance(a)
            | Analysis::Residuals(a)
            | Analysis::Energy(a) => a,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    TaylorGreen,
    Shear,
    RandomBesov,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub generator: Generator,
    /// Grid points per axis (power of two, at least 8).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub members: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hölder-type exponent of random-besov members, in (0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub k_min: f64,
    /// Defaults to n/3.
    #[arg(long)]
    pub k_max: Option<f64>,
    /// Shear profile coefficients a_j of f(y) = Σ a_j cos(j y).
    #[arg(long, value_delimiter = ',', default_value = "0,1,0.5")]
    pub shear_modes: Vec<f64>,
    /// Frozen copies at evenly spaced times in [0, t_end].
    #[arg(long, default_value_t = 1)]
    pub snapshots: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value = "ensemble.ostf")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileArg {
    Bump,
    QuarticSpline,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Structure-function exponent (1.5, 2 or 3).
    #[arg(long, default_value_t = 3.0)]
    pub q: f64,
    /// Smallest radius; defaults to 3h.
    #[arg(long)]
    pub eps_min: Option<f64>,
    /// Largest radius; defaults to L/8.
    #[arg(long)]
    pub eps_max: Option<f64>,
    /// Number of geometric rungs. Without any eps flag the dyadic ladder
    /// L/8, L/16, ... down to 3h is used.
    #[arg(long)]
    pub eps_count: Option<usize>,
    /// Spatial test-function modes (`m0`, `cos:1,2`, `sin:0,1`); repeatable.
    #[arg(long = "psi-mode")]
    pub psi_mode: Vec<String>,
    /// Fit window as first,last rung index.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub window: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = ProfileArg::Bump)]
    pub profile: ProfileArg,
    /// Also write gnuplot-ready two-column `.dat` files.
    #[arg(long)]
    pub plot: bool,
}

/// A failure with its exit code: 2 for invalid parameters, 1 for
/// structural failures.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn structural(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<onsager_core::Error> for Failure {
    fn from(e: onsager_core::Error) -> Self {
        use onsager_core::Error as E;
        let code = match e {
            E::NonPowerOfTwo { .. }
            | E::GridTooSmall { .. }
            | E::InvalidDimension { .. }
            | E::WrongDimension { .. }
            | E::AlphaOutOfRange { .. }
            | E::EmptyBand { .. }
            | E::BandOutOfRange { .. }
            | E::UnderResolved { .. }
            | E::TooWide { .. }
            | E::EmptyStencil { .. }
            | E::UnsupportedExponent(_)
            | E::CostGuard { .. }
            | E::SupportOutsideData { .. }
            | E::TimeOutOfRange { .. }
            | E::InvalidArgument(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::structural(format!("thread pool: {e}")))?;
    }
    let threads = rayon::current_num_threads();
    match &cli.command {
        Command::Generate(args) => generate::run(args, threads),
        Command::Analyze { analysis } | Command::Direct(analysis) => {
            analyze::run(analysis, threads)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
