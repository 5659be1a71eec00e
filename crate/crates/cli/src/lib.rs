//! The `capflow` experiment runner.
//!
//! Every command reads at most one JSON config, writes into one output
//! directory and reports through an exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | config or argument error, no output written |
//! | 3 | monitor abort, inequality violation or order failure |
//! | 4 | flow not converged by `t_max` |
//! | 5 | numeric failure |

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod cmd;
pub mod config;
pub mod fields;
pub mod mesh;
pub mod output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

/// A command failure with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    /// Numeric kinds map to 5, everything else to 2.
    pub fn core(e: capflow::Error) -> Self {
        use capflow::Error::*;
        let code = match e {
            NumericFailure { .. }
            | NotStarShaped { .. }
            | ConeViolation { .. }
            | NotAxisymmetric { .. } => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Self::new(code, e.to_string())
    }

    pub fn numeric(e: capflow::Error) -> Self {
        Self::new(EXIT_NUMERIC, e.to_string())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<capflow::Error> for Failure {
    fn from(e: capflow::Error) -> Self {
        Self::core(e)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "capflow",
    version,
    about = "Capillary curvature flow experiments"
)]
pub struct Cli {
    /// JSON config for the command.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Only errors on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the flow to a steady cap.
    Run,
    /// Numeric quermassintegrals of caps against the closed form.
    CapTable(CapTableArgs),
    /// Alexandrov–Fenchel and Minkowski inequality audit on random convex data.
    AfCheck,
    /// Convergence order of the Minkowski identity residuals.
    MinkowskiCheck,
    /// Triangulate an n = 2 checkpoint.
    ExportMesh(ExportMeshArgs),
    /// Short mean curvature flow that makes weakly convex data strictly convex.
    Convexify,
}

#[derive(Debug, Args)]
pub struct CapTableArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated, radians or pi/2, pi/3, pi/4, pi/6.
    #[arg(long, value_delimiter = ',')]
    pub thetas: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub radii: Option<Vec<f64>>,
    #[arg(long)]
    pub n_beta: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExportMeshArgs {
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    /// Target file [default: <out>/mesh.obj].
    #[arg(long, value_name = "PATH")]
    pub path: Option<PathBuf>,
    /// Azimuths used for axisymmetric checkpoints.
    #[arg(long, default_value_t = mesh::AXISYM_AZIMUTHS)]
    pub azimuths: usize,
}

/// Global options shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Context {
    pub fn out_dir(&self, from_config: Option<&PathBuf>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| from_config.cloned())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn progress(&self, line: impl fmt::Display) {
        if !self.quiet {
            eprintln!("{line}");
        }
    }

    pub fn require_config(&self) -> Result<&PathBuf, Failure> {
        self.config
            .as_ref()
            .ok_or_else(|| Failure::usage("this command needs --config PATH"))
    }
}

/// Sizes the rayon pool from `CAPFLOW_THREADS`.
pub fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CAPFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Failure::usage(format!(
            "CAPFLOW_THREADS = {raw:?} is not a positive integer"
        ))
    })?;
    // a second call in one process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), Failure> {
    let ctx = Context {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Run => cmd::run::execute(&ctx),
        Command::CapTable(args) => cmd::cap_table::execute(&ctx, &args),
        Command::AfCheck => cmd::af_check::execute(&ctx),
        Command::MinkowskiCheck => cmd::minkowski::execute(&ctx),
        Command::ExportMesh(args) => cmd::export_mesh::execute(&ctx, &args),
        Command::Convexify => cmd::convexify::execute(&ctx),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors go to stderr.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|()| execute(cli));
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("capflow: {}", f.message);
            f.code
        }
    }
}
