//! The pipeline commands: ingest, train, backtest and compare.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::config::{OutputFormat, RunConfig, DATA_DIR_ENV};
use super::io::{read_text, write_atomic};
use super::CliError;
use crate::agents::{
    train_ddpg_with, train_dqn_with, train_ppo_with, train_td3_with, AgentConfig, AgentError, Algorithm, Policy,
    TrainObserver, TrainingLog,
};
use crate::backtest::{
    compare, dollar_sharpe, run_backtest_from, Actor, BacktestError, BacktestRun, ComparisonTable, MetricsReport,
};
use crate::data::{
    compute_macd, compute_rsi, format_timestamp, ingest_csv, rolling_windows, write_canonical_csv, DataError,
    MacdParams, MarketFrame, SplitSpec, TimeRange,
};
use crate::env::{EnvConfig, TradingEnv};

/// A validated configuration plus where it reads data and writes artifacts.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: RunConfig,
    pub data_root: PathBuf,
    pub out_dir: PathBuf,
    /// Overrides every agent's seed when set.
    pub seed: Option<u64>,
}

impl Session {
    /// Validates `config` before anything runs. `out` overrides the
    /// configured output directory.
    pub fn new(config: RunConfig, data_root: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self, CliError> {
        config.validate(&data_root)?;
        let out_dir = out.unwrap_or_else(|| config.output.dir.clone());
        Ok(Self { config, data_root, out_dir, seed })
    }

    /// Loads a config file. Relative data paths resolve against
    /// `MARKETGYM_DATA_DIR` when set, otherwise against `data.root` taken
    /// relative to the config's directory.
    pub fn from_file(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self, CliError> {
        let config = RunConfig::load(path)?;
        let config_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let data_root = std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| config_dir.join(config.data.root.clone().unwrap_or_default()));
        Self::new(config, data_root, out, seed)
    }

    /// Agent configs with the seed override and a default checkpoint
    /// cadence of ten checkpoints per run.
    pub fn agents(&self) -> Vec<AgentConfig> {
        self.config
            .agents
            .iter()
            .map(|a| {
                let mut a = a.clone();
                if let Some(seed) = self.seed {
                    a.seed = seed;
                }
                if a.checkpoint_interval.is_none() {
                    a.checkpoint_interval = Some((a.total_steps / 10).max(1));
                }
                a
            })
            .collect()
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

pub(crate) fn slug(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    while s.contains("__") {
        s = s.replace("__", "_");
    }
    s.trim_matches('_').to_string()
}

pub fn policy_file(algorithm: Algorithm) -> String {
    format!("policy_{}.json", slug(&algorithm.to_string()))
}

pub fn report_file(name: &str) -> String {
    format!("report_{}.json", slug(name))
}

fn data_error(e: DataError) -> CliError {
    CliError::Validation(format!("data: {e}"))
}

/// Maps library failures onto the documented exit-code classes.
pub(crate) fn backtest_error(e: BacktestError) -> CliError {
    use crate::baselines::BaselineError;
    use crate::env::EnvError;
    match e {
        BacktestError::LayoutMismatch(msg) => CliError::LayoutMismatch(msg),
        BacktestError::Agent(AgentError::IncompatibleActionSpace(msg) | AgentError::ShapeMismatch(msg)) => {
            CliError::LayoutMismatch(msg)
        }
        BacktestError::Env(
            e @ (EnvError::InvalidConfig(_)
            | EnvError::TaskShapeMismatch(_)
            | EnvError::InsufficientHistory { .. }
            | EnvError::FrameTooShort(_)
            | EnvError::MissingIndicator(_)),
        ) => CliError::Validation(e.to_string()),
        BacktestError::Baseline(e @ (BaselineError::InvalidConfig(_) | BaselineError::InsufficientHistory { .. })) => {
            CliError::Validation(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    }
}

/// The full frame with indicators and the row ranges of the three segments.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub frame: MarketFrame,
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

impl PreparedData {
    /// The frame up to the end of `rows` and the row where episodes start.
    /// Earlier rows remain available as history.
    pub fn segment(&self, rows: &Range<usize>) -> Result<(Arc<MarketFrame>, usize), CliError> {
        let frame = self.frame.slice(0, rows.end).map_err(data_error)?;
        Ok((Arc::new(frame), rows.start))
    }

    pub fn train_env(&self, config: &EnvConfig) -> Result<TradingEnv, CliError> {
        let (frame, start) = self.segment(&self.train)?;
        TradingEnv::with_start(frame, config.clone(), start.max(config.gate.warm_up()))
            .map_err(|e| CliError::Validation(format!("train split: {e}")))
    }

    pub fn run(&self, actor: Actor<'_>, rows: &Range<usize>, config: &EnvConfig) -> Result<BacktestRun, CliError> {
        let (frame, start) = self.segment(rows)?;
        run_backtest_from(actor, frame, config, start.max(config.gate.warm_up())).map_err(backtest_error)
    }
}

fn load_frame(session: &Session) -> Result<MarketFrame, CliError> {
    let cfg = &session.config;
    let frame = ingest_csv(cfg.data_path(&session.data_root), &cfg.schema()).map_err(data_error)?;
    match &cfg.data.tickers {
        Some(tickers) => frame.select_tickers(tickers).map_err(data_error),
        None => Ok(frame),
    }
}

fn rows_of(frame: &MarketFrame, range: TimeRange, name: &str) -> Result<Range<usize>, CliError> {
    let rows = frame.lower_bound(range.start)..frame.lower_bound(range.end);
    if rows.len() < 2 {
        return Err(CliError::Validation(format!(
            "{name} split covers {} rows of the data; at least 2 are needed",
            rows.len()
        )));
    }
    Ok(rows)
}

/// Ingests the data, computes indicators on the full history and resolves
/// the split, then checks the size-dependent parts of the config.
pub fn prepare(session: &Session) -> Result<PreparedData, CliError> {
    let cfg = &session.config;
    let frame = load_frame(session)?;
    let frame = compute_macd(frame, MacdParams::default()).map_err(data_error)?;
    let frame = compute_rsi(frame, cfg.data.rsi_period).map_err(data_error)?;
    let n = frame.n_assets();
    cfg.env.validate(n).map_err(|e| CliError::Validation(format!("env: {e}")))?;
    for b in &cfg.baselines {
        b.validate(n).map_err(|e| CliError::Validation(format!("baseline {}: {e}", b.label())))?;
    }
    let spec: SplitSpec = match (&cfg.split, &cfg.rolling) {
        (Some(spec), _) => *spec,
        (None, Some(r)) => {
            let windows =
                rolling_windows(&frame, r.train_len, r.val_len, r.test_len, r.stride).map_err(data_error)?;
            *windows.get(r.window).ok_or_else(|| {
                CliError::Validation(format!("rolling window {} requested, only {} fit", r.window, windows.len()))
            })?
        }
        (None, None) => unreachable!("validated"),
    };
    let train = rows_of(&frame, spec.train(), "train")?;
    let validation = rows_of(&frame, spec.validation(), "validation")?;
    let test = rows_of(&frame, spec.test(), "test")?;
    let warm_up = cfg.env.gate.warm_up();
    if train.end < warm_up + 2 {
        return Err(CliError::Validation(format!(
            "train split ends at row {}, but the turbulence gate needs {warm_up} rows of history first",
            train.end
        )));
    }
    for (name, rows) in [("validation", &validation), ("test", &test)] {
        if rows.start < warm_up {
            return Err(CliError::Validation(format!(
                "{name} split starts at row {}, before the {warm_up}-row turbulence warm-up",
                rows.start
            )));
        }
    }
    Ok(PreparedData { frame, train, validation, test })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub start: String,
    pub end: String,
    pub granularity: String,
    pub tickers: Vec<String>,
}

/// Writes `frame.csv` (canonical bars) and `summary.json`.
pub fn cmd_ingest(session: &Session) -> Result<IngestSummary, CliError> {
    let frame = load_frame(session)?;
    let stamps = frame.timestamps();
    let summary = IngestSummary {
        n: frame.n_assets(),
        t: frame.len(),
        start: format_timestamp(&stamps[0]),
        end: format_timestamp(&stamps[stamps.len() - 1]),
        granularity: frame.granularity().to_string(),
        tickers: frame.tickers().to_vec(),
    };
    let mut csv = Vec::new();
    write_canonical_csv(&frame, &mut csv).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_atomic(&session.artifact("frame.csv"), &csv)?;
    write_atomic(&session.artifact("summary.json"), json_bytes(&summary)?.as_slice())?;
    Ok(summary)
}

pub(crate) fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// Validation-split Sharpe of the dollar value changes. A flat curve
/// scores zero.
pub fn validation_score(run: &BacktestRun) -> Result<f64, BacktestError> {
    match dollar_sharpe(run.curve.values(), run.curve.periods_per_year()) {
        Err(BacktestError::ZeroVariance) => Ok(0.0),
        other => other,
    }
}

pub const CHECKPOINT_LOG_HEADER: &str = "step,val_sharpe";

/// Scores every checkpoint on the validation split and keeps the best.
/// Ties keep the earlier checkpoint.
struct CheckpointSelector<'a> {
    data: &'a PreparedData,
    env: &'a EnvConfig,
    log: TrainingLog,
    checkpoints: Vec<(usize, f64)>,
    best: Option<(usize, f64, Policy)>,
}

impl TrainObserver for CheckpointSelector<'_> {
    fn on_episode(&mut self, record: &crate::agents::EpisodeRecord) -> Result<(), AgentError> {
        self.log.on_episode(record)
    }

    fn on_checkpoint(&mut self, step: usize, policy: &Policy) -> Result<(), AgentError> {
        let run = self.data.run(Actor::Policy(policy), &self.data.validation, self.env).map_err(|e| match e {
            CliError::LayoutMismatch(msg) => AgentError::ShapeMismatch(msg),
            other => AgentError::InvalidConfig(format!("checkpoint evaluation failed: {other}")),
        })?;
        let score = validation_score(&run).map_err(|e| AgentError::InvalidConfig(e.to_string()))?;
        self.checkpoints.push((step, score));
        if self.best.as_ref().is_none_or(|(_, best, _)| score > *best) {
            self.best = Some((step, score, policy.clone()));
        }
        Ok(())
    }
}

impl CheckpointSelector<'_> {
    fn checkpoint_csv(&self) -> Vec<u8> {
        let mut out = format!("{CHECKPOINT_LOG_HEADER}\n");
        for (step, score) in &self.checkpoints {
            out.push_str(&format!("{step},{score}\n"));
        }
        out.into_bytes()
    }

    fn training_csv(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.log.write_csv(&mut buf).expect("writing to memory");
        buf
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub algorithm: String,
    pub seed: u64,
    pub policy: String,
    pub best_step: usize,
    pub val_sharpe: f64,
    pub checkpoints: usize,
    pub episodes: usize,
}

/// Trains every configured agent on the train split, keeping the checkpoint
/// with the best validation Sharpe. Writes `policy_<algo>.json`,
/// `training_log_<algo>.csv` and `checkpoints_<algo>.csv`.
pub fn cmd_train(session: &Session) -> Result<Vec<TrainSummary>, CliError> {
    let data = prepare(session)?;
    train_prepared(session, &data)
}

pub(crate) fn train_prepared(session: &Session, data: &PreparedData) -> Result<Vec<TrainSummary>, CliError> {
    let env_cfg = &session.config.env;
    let mut summaries = Vec::new();
    for agent in session.agents() {
        let name = slug(&agent.algorithm.to_string());
        let mut env = data.train_env(env_cfg)?;
        let mut selector =
            CheckpointSelector { data, env: env_cfg, log: TrainingLog::default(), checkpoints: Vec::new(), best: None };
        let result = match agent.algorithm {
            Algorithm::Dqn => train_dqn_with(&mut env, &agent, &mut selector),
            Algorithm::Ddpg => train_ddpg_with(&mut env, &agent, &mut selector),
            Algorithm::Td3 => train_td3_with(&mut env, &agent, &mut selector),
            Algorithm::Ppo => train_ppo_with(&mut env, &agent, &mut selector),
        };
        let log_path = session.artifact(&format!("training_log_{name}.csv"));
        write_atomic(&log_path, &selector.training_csv())?;
        write_atomic(&session.artifact(&format!("checkpoints_{name}.csv")), &selector.checkpoint_csv())?;
        match result {
            Ok(_) => {}
            Err(AgentError::Divergence { step }) => {
                return Err(CliError::Divergence {
                    algorithm: agent.algorithm.to_string(),
                    step,
                    log: log_path.display().to_string(),
                })
            }
            Err(AgentError::InvalidConfig(msg)) => {
                return Err(CliError::Validation(format!("agent {}: {msg}", agent.algorithm)))
            }
            Err(e @ (AgentError::IncompatibleActionSpace(_) | AgentError::ShapeMismatch(_))) => {
                return Err(CliError::Validation(format!("agent {}: {e}", agent.algorithm)))
            }
            Err(e) => return Err(CliError::Runtime(format!("agent {}: {e}", agent.algorithm))),
        }
        let (best_step, val_sharpe, policy) =
            selector.best.take().ok_or_else(|| CliError::Runtime("training produced no checkpoint".into()))?;
        let policy_path = session.artifact(&policy_file(agent.algorithm));
        let json = policy.to_json().map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(&policy_path, json.as_bytes())?;
        summaries.push(TrainSummary {
            algorithm: agent.algorithm.to_string(),
            seed: agent.seed,
            policy: policy_path.display().to_string(),
            best_step,
            val_sharpe,
            checkpoints: selector.checkpoints.len(),
            episodes: selector.log.records.len(),
        });
    }
    Ok(summaries)
}

/// Evaluates policies on the test split. With no explicit paths, every
/// configured agent's `policy_<algo>.json` in the output directory is used.
/// Writes `equity_<name>.csv` and `report_<name>.json` per policy.
pub fn cmd_backtest(session: &Session, policies: &[PathBuf]) -> Result<Vec<MetricsReport>, CliError> {
    let data = prepare(session)?;
    backtest_prepared(session, &data, policies)
}

pub(crate) fn backtest_prepared(
    session: &Session,
    data: &PreparedData,
    policies: &[PathBuf],
) -> Result<Vec<MetricsReport>, CliError> {
    let paths: Vec<PathBuf> = if policies.is_empty() {
        session.config.agents.iter().map(|a| session.artifact(&policy_file(a.algorithm))).collect()
    } else {
        policies.to_vec()
    };
    if paths.is_empty() {
        return Err(CliError::Validation("no policy to backtest: configure an [[agent]] or pass --policy".into()));
    }
    let seeds = session.agents();
    let mut reports = Vec::new();
    for path in paths {
        let policy = Policy::from_json(&read_text(&path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let run = data.run(Actor::Policy(&policy), &data.test, &session.config.env)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("policy");
        let name = stem.strip_prefix("policy_").unwrap_or(stem).to_string();
        let seed = seeds.iter().find(|a| a.algorithm == policy.algorithm()).map(|a| a.seed);
        let report = MetricsReport::from_curve(policy.algorithm().to_string(), &run.curve, seed);
        let mut curve_csv = Vec::new();
        run.curve.write_csv(&mut curve_csv).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(&session.artifact(&format!("equity_{name}.csv")), &curve_csv)?;
        write_atomic(&session.artifact(&format!("report_{name}.json")), &json_bytes(&report)?)?;
        reports.push(report);
    }
    Ok(reports)
}

/// Loads a report file, mapping a schema-version mismatch to its own error.
pub fn load_report(path: &Path) -> Result<MetricsReport, CliError> {
    MetricsReport::from_json(&read_text(path)?).map_err(|e| match e {
        BacktestError::SchemaVersion { .. } => {
            CliError::SchemaVersion { path: path.display().to_string(), message: e.to_string() }
        }
        other => CliError::Validation(format!("{}: {other}", path.display())),
    })
}

/// Renders the given reports next to the configured baselines, computed on
/// the test split. With no paths, the configured agents' reports in the
/// output directory are used. Writes `comparison.{txt,csv,json}` per the
/// configured formats, and a report per baseline.
pub fn cmd_compare(session: &Session, reports: &[PathBuf]) -> Result<ComparisonTable, CliError> {
    let paths: Vec<PathBuf> = if reports.is_empty() {
        session
            .config
            .agents
            .iter()
            .map(|a| session.artifact(&report_file(&a.algorithm.to_string())))
            .collect()
    } else {
        reports.to_vec()
    };
    let mut columns = paths.iter().map(|p| load_report(p)).collect::<Result<Vec<_>, _>>()?;
    if !session.config.baselines.is_empty() {
        let data = prepare(session)?;
        for baseline in &session.config.baselines {
            let run = data.run(Actor::Strategy(baseline), &data.test, &session.config.env)?;
            let report = MetricsReport::from_curve(baseline.label(), &run.curve, None);
            write_atomic(&session.artifact(&report_file(&baseline.label())), &json_bytes(&report)?)?;
            columns.push(report);
        }
    }
    let table = compare(&columns).map_err(|e| CliError::Validation(e.to_string()))?;
    for format in &session.config.output.formats {
        let (file, bytes) = match format {
            OutputFormat::Text => ("comparison.txt", table.render_text().into_bytes()),
            OutputFormat::Csv => ("comparison.csv", table.render_csv().map_err(backtest_error)?.into_bytes()),
            OutputFormat::Json => ("comparison.json", json_bytes(table.columns())?),
        };
        write_atomic(&session.artifact(file), &bytes)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("TD3"), "td3");
        assert_eq!(slug("Min-Var."), "min_var");
        assert_eq!(slug("Buy and hold"), "buy_and_hold");
    }
}
