//! Command-line front end for `rhoagg` and the JSON server behind the
//! weight explorer.
//!
//! Exit codes: 0 on success, 1 for usage and input errors, 2 for numerical
//! failures (non-convergence, zero variance, singular systems).

pub mod commands;
pub mod server;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rhoagg::evaluation::Method;
use rhoagg::par::Exec;
use rhoagg::Direction;

#[derive(Debug, Parser)]
#[command(
    name = "rhoagg",
    version,
    about = "Rank aggregation with multivariate Spearman rho"
)]
pub struct Cli {
    /// Run every data-parallel step on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Aggregate the sources of a ranking CSV into one consensus list.
    Aggregate(AggregateArgs),
    /// Learn expert weights on each fold of a LETOR directory.
    Train(TrainArgs),
    /// Score a method on each fold of a LETOR directory.
    Eval(EvalArgs),
    /// Fill the blanks of a ranking CSV.
    Impute(ImputeArgs),
    /// Serve the JSON API for a ranking CSV.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Top,
    Bottom,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Top => Direction::Top,
            DirectionArg::Bottom => Direction::Bottom,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum AggregateMethodArg {
    Geomean,
    Borda,
    /// Ranks by the product of `1 - value`.
    Min,
    /// Largest product first; the least concordant consensus.
    ReverseGeomean,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "geomean")]
    pub method: AggregateMethodArg,
    #[arg(long, value_enum, default_value = "top")]
    pub direction: DirectionArg,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum MethodArg {
    RagsTop,
    RagsBottom,
    Geomean,
    Borda,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::RagsTop => Method::RagsTop,
            MethodArg::RagsBottom => Method::RagsBottom,
            MethodArg::Geomean => Method::GeoMean,
            MethodArg::Borda => Method::Borda,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory with Fold1..Fold5.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "rags_top")]
    pub method: MethodArg,
    #[arg(long, default_value_t = rhoagg::learning::DEFAULT_RIDGE)]
    pub ridge: f64,
    /// Directory that receives `fold1.json` .. `fold5.json`.
    #[arg(long)]
    pub weights: PathBuf,
    /// Read only `NULL` as missing and require integer positions.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "rags_top")]
    pub method: MethodArg,
    /// Used when weights are learned on the fly.
    #[arg(long, default_value_t = rhoagg::learning::DEFAULT_RIDGE)]
    pub ridge: f64,
    /// A directory written by `train`, or one weights file for every fold.
    /// Without it the rags methods train on each fold first.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Metrics CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImputeModeArg {
    Noninformative,
    Max,
    Min,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "noninformative")]
    pub mode: ImputeModeArg,
    #[arg(long, value_enum, default_value = "top")]
    pub direction: DirectionArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Gradient iterations per penalty round.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Largest row or column sum violation accepted as converged.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, value_enum, default_value = "top")]
    pub direction: DirectionArg,
}

impl Cli {
    pub fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }
}

/// The optimizer stopped before meeting its tolerance. Output was still
/// written.
#[derive(Debug)]
pub struct NotConverged {
    pub residual: f64,
}

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "optimizer did not converge (residual {:.3e})", self.residual)
    }
}

impl std::error::Error for NotConverged {}

/// Exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err.chain().any(|e| {
        e.is::<NotConverged>()
            || e.downcast_ref::<rhoagg::Error>()
                .is_some_and(rhoagg::Error::is_numeric)
    });
    if numeric {
        2
    } else {
        1
    }
}

/// Parses `args` and runs the command, writing reports to `out` and
/// diagnostics to standard error. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
