//! Backtesting: deterministic evaluation episodes, equity curves, the five
//! standard metrics, and publication-style comparison tables.

mod curve;
mod metrics;
mod report;

pub use curve::EquityCurve;
pub use metrics::{annualized_return, annualized_std, dollar_sharpe, max_drawdown, sharpe_ratio};
pub use report::{
    compare, format_currency, format_percent, format_ratio, ComparisonTable, MetricsReport, REPORT_SCHEMA_VERSION,
    ROW_LABELS,
};

use std::sync::Arc;

use thiserror::Error;

use crate::agents::{AgentError, Environment, Policy};
use crate::baselines::{run_strategy, run_strategy_window, BaselineError, StrategyConfig};
use crate::data::MarketFrame;
use crate::env::{EnvConfig, EnvError, EpisodeTrace, TradingEnv};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("invalid equity curve: {0}")]
    InvalidCurve(String),
    #[error("need at least 2 returns, have {have}")]
    TooFewReturns { have: usize },
    #[error("returns have zero variance; the Sharpe ratio is undefined")]
    ZeroVariance,
    #[error(
        "report schema version {} is not supported (expected {expected})",
        .found.map_or_else(|| "missing".to_string(), |v| v.to_string())
    )]
    SchemaVersion { found: Option<u64>, expected: u32 },
    #[error("nothing to compare")]
    EmptyComparison,
    #[error("policy does not fit the environment: {0}")]
    LayoutMismatch(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// What drives a backtest episode.
#[derive(Debug, Clone, Copy)]
pub enum Actor<'a> {
    Policy(&'a Policy),
    Strategy(&'a StrategyConfig),
}

#[derive(Debug, Clone)]
pub struct BacktestRun {
    pub curve: EquityCurve,
    pub trace: EpisodeTrace,
}

/// Runs one evaluation episode over the whole frame. Policies start after
/// the environment's warm-up; strategies start once their estimation
/// windows are filled.
pub fn run_backtest(actor: Actor<'_>, frame: Arc<MarketFrame>, config: &EnvConfig) -> Result<BacktestRun, BacktestError> {
    match actor {
        Actor::Policy(policy) => {
            let start = config.gate.warm_up();
            run_policy(policy, frame, config, start)
        }
        Actor::Strategy(strategy) => {
            let trace = run_strategy(&frame, strategy, config.initial_capital, &config.costs)?;
            finish(trace, &frame)
        }
    }
}

/// Runs one evaluation episode over rows `start..` of `frame`; earlier rows
/// serve only as history.
pub fn run_backtest_from(
    actor: Actor<'_>,
    frame: Arc<MarketFrame>,
    config: &EnvConfig,
    start: usize,
) -> Result<BacktestRun, BacktestError> {
    match actor {
        Actor::Policy(policy) => run_policy(policy, frame, config, start),
        Actor::Strategy(strategy) => {
            let trace =
                run_strategy_window(&frame, start..frame.len(), strategy, config.initial_capital, &config.costs)?;
            finish(trace, &frame)
        }
    }
}

fn run_policy(
    policy: &Policy,
    frame: Arc<MarketFrame>,
    config: &EnvConfig,
    start: usize,
) -> Result<BacktestRun, BacktestError> {
    let mut env = TradingEnv::with_start(frame.clone(), config.clone(), start)?;
    if policy.observation_len() != TradingEnv::observation_len(&env) {
        return Err(BacktestError::LayoutMismatch(format!(
            "policy observes {} features, environment provides {}",
            policy.observation_len(),
            TradingEnv::observation_len(&env)
        )));
    }
    if policy.action_space() != Environment::action_space(&env) {
        return Err(BacktestError::LayoutMismatch(format!(
            "policy acts in {:?}, environment expects {:?}",
            policy.action_space(),
            Environment::action_space(&env)
        )));
    }
    let mut obs = TradingEnv::reset(&mut env);
    loop {
        let action = policy.act(&obs)?;
        let tr = Environment::step(&mut env, &action)?;
        if tr.done {
            break;
        }
        obs = tr.observation;
    }
    finish(env.trace().clone(), &frame)
}

fn finish(trace: EpisodeTrace, frame: &MarketFrame) -> Result<BacktestRun, BacktestError> {
    let curve = EquityCurve::from_trace(&trace, frame.granularity().periods_per_year())?;
    Ok(BacktestRun { curve, trace })
}
