//! `cfrmed`: mediation analysis of age-stratified case fatality data.
//!
//! Exit codes: 0 success, 1 property-suite failure, 2 usage or validation error.

mod commands;
mod data;
mod render;

use std::io::Write;
use std::process::ExitCode;

use cfrmed::ingest::ValidationReport;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "cfrmed", version, about = "Total, direct and indirect effects of country on case fatality, mediated by age")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Run everything on one thread (results are identical either way).
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List or inspect datasets.
    Datasets {
        #[command(subcommand)]
        action: DatasetsAction,
    },
    /// Effects of switching from a control cohort to a treatment cohort.
    Effects(EffectsArgs),
    /// TCE, NDE and NIE for every snapshot of a series against a fixed control.
    Trace(TraceArgs),
    /// Pairwise effect matrix over all cohorts of a dataset.
    Matrix(MatrixArgs),
    /// Correlation tests on rankings and pairwise effects.
    Correlate(CorrelateArgs),
    /// Check a cohort pair for a Simpson's reversal.
    Simpson(SimpsonArgs),
    /// Compare exact counterfactual effects of random structural models with the mediation formulas.
    ValidateOracle(OracleArgs),
}

#[derive(Subcommand, Debug)]
enum DatasetsAction {
    /// Bundled datasets with cohort counts, date ranges and sources.
    List,
    /// Cohorts, totals and validation report of one dataset (bundled name or path).
    Show { name: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyArg {
    Error,
    Zero,
}

impl From<PolicyArg> for cfrmed::UndefinedBandPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Error => cfrmed::UndefinedBandPolicy::Error,
            PolicyArg::Zero => cfrmed::UndefinedBandPolicy::Zero,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct EffectsArgs {
    /// Bundled dataset name or path to a dataset file.
    #[arg(long)]
    pub data: String,
    #[arg(long)]
    pub control: String,
    #[arg(long)]
    pub treatment: String,
    /// Also report the controlled direct effect in this band.
    #[arg(long)]
    pub band: Option<String>,
    /// Also report the expected CDE under this cohort's case demographic.
    #[arg(long)]
    pub reference: Option<String>,
    /// Dataset holding the reference cohort (defaults to --data).
    #[arg(long)]
    pub reference_data: Option<String>,
    #[arg(long, value_enum, default_value_t = PolicyArg::Error)]
    pub undefined_band: PolicyArg,
}

#[derive(Args, Debug, Serialize)]
pub struct TraceArgs {
    /// Series dataset.
    #[arg(long)]
    pub data: String,
    /// Control cohort label.
    #[arg(long)]
    pub control: String,
    /// Dataset holding the control cohort.
    #[arg(long, default_value = "countries_latest")]
    pub control_data: String,
    #[arg(long, value_enum, default_value_t = PolicyArg::Error)]
    pub undefined_band: PolicyArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Tce,
    Nde,
    Nie,
}

#[derive(Args, Debug, Serialize)]
pub struct MatrixArgs {
    #[arg(long, default_value = "countries_latest")]
    pub data: String,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Zero)]
    pub undefined_band: PolicyArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestArg {
    /// Spearman between mean NDE and mean NIE as treatment.
    NdeVsNieRank,
    /// Spearman between mean NIE as treatment and population median age.
    NieRankVsMedianAge,
    /// Pearson over all ordered pairs of NDE and NIE, plus sign discordance.
    PairwiseNdeVsNie,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PArg {
    T,
    Permutation,
}

#[derive(Args, Debug, Serialize)]
pub struct CorrelateArgs {
    #[arg(long, default_value = "countries_latest")]
    pub data: String,
    #[arg(long, value_enum)]
    pub test: TestArg,
    /// p-value method: two-sided t approximation or permutation test.
    #[arg(long = "p", value_enum, default_value_t = PArg::T)]
    pub p: PArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// Scalar dataset with median ages.
    #[arg(long, default_value = "median_ages")]
    pub ages: String,
    #[arg(long, value_enum, default_value_t = PolicyArg::Zero)]
    pub undefined_band: PolicyArg,
}

#[derive(Args, Debug, Serialize)]
pub struct SimpsonArgs {
    #[arg(long)]
    pub data: String,
    #[arg(long)]
    pub control: String,
    #[arg(long)]
    pub treatment: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetArg {
    Moderation,
}

#[derive(Args, Debug, Serialize)]
pub struct OracleArgs {
    /// Mediator levels of the random models.
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u64).range(1..=10_000))]
    pub k: u64,
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also run the sampling study with this many cases per arm.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub sample_n: Option<u64>,
    /// Models in the sampling study.
    #[arg(long, default_value_t = 50)]
    pub models: usize,
    /// Replicates per model for the sampling spread.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    pub replicates: u64,
    /// Check a named model instead of the random suite.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
}

/// An error that ends the run with a given exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    pub report: Option<ValidationReport>,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into(), report: None }
    }

    pub fn validation(message: impl Into<String>, report: ValidationReport) -> Self {
        Failure { code: 2, message: message.into(), report: Some(report) }
    }
}

impl From<cfrmed::Error> for Failure {
    fn from(e: cfrmed::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

/// A rendered result in all three formats; only one is printed.
pub struct Output {
    pub json: serde_json::Value,
    pub table: String,
    pub csv: String,
    pub exit_code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { cfrmed::Execution::Sequential } else { cfrmed::Execution::Parallel };
    let result = match &cli.command {
        Command::Datasets { action: DatasetsAction::List } => commands::datasets_list(),
        Command::Datasets { action: DatasetsAction::Show { name } } => commands::datasets_show(name),
        Command::Effects(a) => commands::effects(a),
        Command::Trace(a) => commands::trace(a),
        Command::Matrix(a) => commands::matrix(a, exec),
        Command::Correlate(a) => commands::correlate(a, exec),
        Command::Simpson(a) => commands::simpson(a),
        Command::ValidateOracle(a) => commands::validate_oracle(a, exec),
    };
    match result {
        Ok(out) => {
            let text = match cli.format {
                Format::Table => out.table,
                Format::Csv => out.csv,
                Format::Json => serde_json::to_string_pretty(&out.json).expect("json values serialize") + "\n",
            };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(out.exit_code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            if let Some(r) = &f.report {
                for d in &r.errors {
                    eprintln!("  error   {}: {}", d.location, d.message);
                }
                for d in &r.warnings {
                    eprintln!("  warning {}: {}", d.location, d.message);
                }
            }
            ExitCode::from(f.code)
        }
    }
}
