//! Command-line front end: argument parsing, data ingestion and output
//! documents. `main` only forwards to [`run`].

use std::ffi::OsString;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rstar_core::models::builtin_model;
use rstar_core::simulate::DEFAULT_LEVELS;
use rstar_core::statistics::StatisticKind;
use thiserror::Error;

mod commands;
mod ingest;
mod output;

pub use ingest::{ingest_csv, load_dataset};
pub use output::{Document, LimitsTable, DiagnoseRecord, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Numerical(#[from] rstar_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// 1 for anything the caller can fix on the command line or in the
    /// data, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use rstar_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Data(_) => 1,
            CliError::Numerical(e) => match e.root() {
                E::InvalidInput(_) | E::Data(_) | E::Unsupported(_) => 1,
                _ => 2,
            },
            CliError::Output(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rstar", version, about = "Likelihood-root confidence limits and coverage studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximum likelihood fit: estimate, observed information, log-likelihood.
    Fit(FitArgs),
    /// R, U bar, U hat, R bar* and R hat* at given interest values.
    Statistic(StatisticArgs),
    /// Upper confidence limits for each statistic and probability.
    Limits(LimitsArgs),
    /// Monte Carlo coverage of the upper limits at a true parameter.
    Coverage(CoverageArgs),
    /// Normality and agreement-rate diagnostics by simulation.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Model id: linexp or normal.
    #[arg(long, default_value = "linexp")]
    pub model: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct DataArg {
    /// Built-in data set id (leukemia21) or path to a CSV file.
    #[arg(long)]
    pub data: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub data: DataArg,
}

#[derive(Debug, Args)]
pub struct StatisticArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub data: DataArg,
    /// Interest parameter value(s), comma separated.
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub psi: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub data: DataArg,
    #[command(flatten)]
    pub selection: Selection,
}

#[derive(Debug, Args)]
pub struct Selection {
    /// Statistics, comma separated: R, Rbar, Rhat.
    #[arg(long, value_delimiter = ',', default_values_t = StatisticKind::ALL.map(|k| k.to_string()))]
    pub kinds: Vec<String>,
    /// Probabilities in (0, 1), comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS)]
    pub levels: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SimulationArgs {
    /// True parameter, comma separated (interest parameter first).
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Thread count; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub simulation: SimulationArgs,
    #[command(flatten)]
    pub selection: Selection,
    /// Observations per replicate.
    #[arg(long, default_value_t = 21)]
    pub n: usize,
    /// Number of replicates.
    #[arg(long, default_value_t = 20_000)]
    pub reps: usize,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[command(flatten)]
    pub simulation: SimulationArgs,
    /// Observations per replicate for the normality diagnostic.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Replicates for the normality diagnostic.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Sample sizes for the agreement-rate probe.
    #[arg(long, value_delimiter = ',', default_values_t = [50usize, 200])]
    pub rate_n: Vec<usize>,
    /// Replicates per sample size for the agreement-rate probe.
    #[arg(long, default_value_t = 200)]
    pub rate_reps: usize,
}

impl Selection {
    pub fn kinds(&self) -> Result<Vec<StatisticKind>, CliError> {
        self.kinds
            .iter()
            .map(|k| k.parse().map_err(|e: rstar_core::Error| CliError::Usage(e.to_string())))
            .collect()
    }

    pub fn levels(&self) -> Result<Vec<f64>, CliError> {
        if let Some(p) = self.levels.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(CliError::Usage(format!("level {p} is outside (0, 1)")));
        }
        Ok(self.levels.clone())
    }
}

pub(crate) fn model(id: &str) -> Result<Box<dyn rstar_core::models::Model>, CliError> {
    builtin_model(id).ok_or_else(|| CliError::Usage(format!("unknown model `{id}` (expected linexp or normal)")))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Documents go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::execute(&cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
