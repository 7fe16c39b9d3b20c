//! Command-line front end: config-driven ingest, train, backtest and compare
//! commands plus the bundled demos.
//!
//! Exit codes are stable:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | runtime failure (I/O, numerical) |
//! | 2 | invalid config, data or arguments |
//! | 3 | training diverged; the partial training log is kept |
//! | 4 | policy does not fit the environment layout |
//! | 5 | report file has an unsupported schema version |
//!
//! Diagnostics go to stderr. Stdout carries only the summary of what was
//! written, in the format chosen with `--format`.

mod commands;
mod config;
mod demo;
mod io;

pub use commands::{
    cmd_backtest, cmd_compare, cmd_ingest, cmd_train, load_report, policy_file, prepare, report_file,
    validation_score, IngestSummary, PreparedData, Session, TrainSummary, CHECKPOINT_LOG_HEADER,
};
pub use config::{DataConfig, OutputConfig, OutputFormat, RollingConfig, RunConfig, DATA_DIR_ENV, DEFAULT_RSI_PERIOD};
pub use demo::{
    bundled_data_dir, cmd_demo, demo_session, random_policy_sharpe, run_demo, sanity_checks, DemoSummary,
    SanityCheck, UseCase, RANDOM_POLICY_SEEDS,
};
pub use io::write_atomic;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::backtest::{compare, MetricsReport};

pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const DIVERGENCE: i32 = 3;
    pub const LAYOUT_MISMATCH: i32 = 4;
    pub const SCHEMA_VERSION: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{algorithm} training diverged at step {step}; partial log kept at {log}")]
    Divergence { algorithm: String, step: usize, log: String },
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("{path}: {message}")]
    SchemaVersion { path: String, message: String },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Divergence { .. } => exit::DIVERGENCE,
            CliError::LayoutMismatch(_) => exit::LAYOUT_MISMATCH,
            CliError::SchemaVersion { .. } => exit::SCHEMA_VERSION,
            CliError::Runtime(_) => exit::RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "marketgym", version, about = "Train and backtest trading agents on bar data")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every agent's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of the summary printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    /// Print nothing on success.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and canonicalize the bar data; write frame.csv and summary.json.
    Ingest,
    /// Train the configured agents, keeping the best validation checkpoint.
    Train,
    /// Evaluate policies on the test split.
    Backtest {
        /// Policy files; defaults to the configured agents' policies.
        #[arg(long = "policy")]
        policies: Vec<PathBuf>,
    },
    /// Tabulate reports next to the configured baselines.
    Compare {
        /// Report files; defaults to the configured agents' reports.
        reports: Vec<PathBuf>,
    },
    /// Run a bundled use case end to end on the synthetic dataset.
    Demo {
        #[arg(value_enum)]
        use_case: UseCase,
    },
}

fn session(cli: &Cli) -> Result<Session, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Validation("--config <path> is required for this command".into()))?;
    Session::from_file(path, cli.out.clone(), cli.seed)
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn render_reports(reports: &[MetricsReport], format: OutputFormat) -> Result<String, CliError> {
    let table = compare(reports).map_err(|e| CliError::Validation(e.to_string()))?;
    match format {
        OutputFormat::Json => to_json(reports),
        OutputFormat::Csv => table.render_csv().map_err(commands::backtest_error),
        OutputFormat::Text => Ok(table.render_text()),
    }
}

/// Runs the parsed command and returns the stdout summary.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Ingest => {
            let summary = cmd_ingest(&session(cli)?)?;
            match cli.format {
                OutputFormat::Json => to_json(&summary),
                OutputFormat::Csv => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        n: usize,
                        #[serde(rename = "T")]
                        t: usize,
                        start: &'a str,
                        end: &'a str,
                        granularity: &'a str,
                    }
                    to_csv(&[Row {
                        n: summary.n,
                        t: summary.t,
                        start: &summary.start,
                        end: &summary.end,
                        granularity: &summary.granularity,
                    }])
                }
                OutputFormat::Text => Ok(format!(
                    "n={} T={} {}..{} {}\n",
                    summary.n, summary.t, summary.start, summary.end, summary.granularity
                )),
            }
        }
        Command::Train => {
            let summaries = cmd_train(&session(cli)?)?;
            match cli.format {
                OutputFormat::Json => to_json(&summaries),
                OutputFormat::Csv => to_csv(&summaries),
                OutputFormat::Text => Ok(summaries
                    .iter()
                    .map(|s| {
                        format!(
                            "{}: {} (best step {}, validation Sharpe {:.4})\n",
                            s.algorithm, s.policy, s.best_step, s.val_sharpe
                        )
                    })
                    .collect()),
            }
        }
        Command::Backtest { policies } => {
            let reports = cmd_backtest(&session(cli)?, policies)?;
            render_reports(&reports, cli.format)
        }
        Command::Compare { reports } => {
            let table = cmd_compare(&session(cli)?, reports)?;
            render_reports(table.columns(), cli.format)
        }
        Command::Demo { use_case } => {
            let summary = cmd_demo(*use_case, cli.out.clone(), cli.seed)?;
            match cli.format {
                OutputFormat::Json => to_json(&summary),
                OutputFormat::Csv => summary.table.render_csv().map_err(commands::backtest_error),
                OutputFormat::Text => {
                    let mut text = summary.table.render_text();
                    for check in &summary.sanity {
                        text.push_str(&format!(
                            "\n{} training-split Sharpe {:.3} vs random-policy median {:.3}: {}",
                            check.agent,
                            check.agent_sharpe,
                            check.random_median,
                            if check.passed { "ok" } else { "below" }
                        ));
                    }
                    text.push('\n');
                    Ok(text)
                }
            }
        }
    }
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            if !cli.quiet {
                print!("{summary}");
                if !summary.ends_with('\n') {
                    println!();
                }
            }
            exit::OK
        }
        Err(e) => {
            eprintln!("marketgym: error: {e}");
            e.exit_code()
        }
    }
}
