//! Time-driven trading MDP over a [`MarketFrame`].
//!
//! Each step fills the agent's orders at the current close (plus or minus the
//! half spread), advances one bar, and marks the book to the next close.
//! Observations use the layout `[balance, holdings.., closes.., macd.., rsi..]`,
//! so their length is `1 + 4n`.

mod execution;
mod reward;
mod trace;
mod turbulence;

pub use execution::{execute, Book, CostModel, Fill};
pub use reward::{reward_delta_value, reward_log_return, reward_trailing_sharpe, RewardKind, RewardSpec};
pub use trace::{EpisodeTrace, TraceRow};
pub use turbulence::{apply_turbulence_gate, compute_turbulence, TurbulenceGate};

use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{MarketFrame, MACD, RSI};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("task/shape mismatch: {0}")]
    TaskShapeMismatch(String),
    #[error("frame lacks indicator `{0}`")]
    MissingIndicator(String),
    #[error("frame too short: {0}")]
    FrameTooShort(String),
    #[error("episode is done; call reset")]
    EpisodeDone,
    #[error("action has {got} components, expected {expected}")]
    ActionShapeMismatch { expected: usize, got: usize },
    #[error("action contains a non-finite value")]
    NonFiniteAction,
    #[error("illegal action: {0}")]
    IllegalAction(String),
    #[error("portfolio value {0} is not positive")]
    NonPositiveValue(f64),
    #[error("need at least 2 value changes in the window, have {available}")]
    WindowTooShort { available: usize },
    #[error("need {required} history rows, have {available}")]
    InsufficientHistory { required: usize, available: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SingleStock,
    MultiStock,
    PortfolioAllocation,
}

/// Action variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionSpec {
    /// Integer share orders in `-max_shares..=max_shares` per asset.
    DiscreteShares { max_shares: u32 },
    /// Raw outputs in `[-1, 1]` per asset, mapped to `round(raw * max_shares)`.
    ContinuousShares { max_shares: u32 },
    /// Any finite vector; normalized to portfolio weights by a softmax.
    SimplexWeights,
}

impl ActionSpec {
    /// Number of legal choices per asset for discrete actions.
    pub fn legal_action_count(&self) -> Option<usize> {
        match self {
            ActionSpec::DiscreteShares { max_shares } => Some(2 * *max_shares as usize + 1),
            _ => None,
        }
    }
}

/// An action submitted to [`TradingEnv::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum EnvAction {
    /// Signed share counts, for [`ActionSpec::DiscreteShares`].
    Shares(Vec<i64>),
    /// Raw continuous outputs, for the continuous and simplex variants.
    Raw(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub task: TaskKind,
    pub action: ActionSpec,
    pub reward: RewardSpec,
    #[serde(default)]
    pub costs: CostModel,
    #[serde(default)]
    pub gate: TurbulenceGate,
    pub initial_capital: f64,
}

impl EnvConfig {
    pub fn single_stock(max_shares: u32, initial_capital: f64) -> Self {
        Self {
            task: TaskKind::SingleStock,
            action: ActionSpec::DiscreteShares { max_shares },
            reward: RewardSpec::delta_value(),
            costs: CostModel::zero(),
            gate: TurbulenceGate::disabled(),
            initial_capital,
        }
    }

    pub fn multi_stock(max_shares: u32, initial_capital: f64) -> Self {
        Self {
            task: TaskKind::MultiStock,
            action: ActionSpec::ContinuousShares { max_shares },
            ..Self::single_stock(max_shares, initial_capital)
        }
    }

    pub fn portfolio(initial_capital: f64) -> Self {
        Self {
            task: TaskKind::PortfolioAllocation,
            action: ActionSpec::SimplexWeights,
            ..Self::single_stock(0, initial_capital)
        }
    }

    pub fn validate(&self, n_assets: usize) -> Result<(), EnvError> {
        if !(self.initial_capital.is_finite() && self.initial_capital > 0.0) {
            return Err(EnvError::InvalidConfig(format!(
                "initial capital must be > 0, got {}",
                self.initial_capital
            )));
        }
        match (self.task, self.action) {
            (TaskKind::SingleStock, _) if n_assets != 1 => {
                return Err(EnvError::TaskShapeMismatch(format!(
                    "single-stock task needs exactly one ticker, frame has {n_assets}"
                )))
            }
            (TaskKind::PortfolioAllocation, ActionSpec::SimplexWeights) => {}
            (TaskKind::PortfolioAllocation, _) => {
                return Err(EnvError::TaskShapeMismatch("portfolio allocation uses simplex weight actions".into()))
            }
            (_, ActionSpec::SimplexWeights) => {
                return Err(EnvError::TaskShapeMismatch("simplex weights are only for portfolio allocation".into()))
            }
            (_, ActionSpec::DiscreteShares { max_shares } | ActionSpec::ContinuousShares { max_shares }) => {
                if max_shares == 0 {
                    return Err(EnvError::InvalidConfig("max_shares must be >= 1".into()));
                }
            }
        }
        self.reward.validate()?;
        self.costs.validate()?;
        self.gate.validate(n_assets)
    }
}

/// Portfolio snapshot at one bar.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioState {
    pub step_index: usize,
    pub balance: f64,
    pub holdings: Vec<u64>,
    pub prices: Vec<f64>,
}

impl PortfolioState {
    /// `balance + holdings . prices`.
    pub fn value(&self) -> f64 {
        self.balance
            + self
                .holdings
                .iter()
                .zip(&self.prices)
                .map(|(h, p)| *h as f64 * p)
                .sum::<f64>()
    }
}

/// Diagnostics for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub executed: Vec<i64>,
    pub fees: f64,
    pub spread_cost: f64,
    pub turbulence: Option<f64>,
    pub gate_triggered: bool,
    /// Value before trading, at the old close.
    pub value_before: f64,
    /// Value after the bar advances, at the new close.
    pub value_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Trading environment. Cheap to clone; the frame is shared.
#[derive(Debug, Clone)]
pub struct TradingEnv {
    frame: Arc<MarketFrame>,
    config: EnvConfig,
    /// Asset indices sorted by ticker, the buy fill order.
    fill_order: Vec<usize>,
    turbulence: Vec<Option<f64>>,
    start: usize,
    row: usize,
    book: Book,
    values: Vec<f64>,
    done: bool,
    trace: EpisodeTrace,
}

/// Builds an environment positioned before its first step; call
/// [`TradingEnv::reset`] to obtain the initial observation.
pub fn make_env(frame: impl Into<Arc<MarketFrame>>, config: EnvConfig) -> Result<TradingEnv, EnvError> {
    TradingEnv::new(frame.into(), config)
}

impl TradingEnv {
    pub fn new(frame: Arc<MarketFrame>, config: EnvConfig) -> Result<Self, EnvError> {
        let start = config.gate.warm_up();
        Self::with_start(frame, config, start)
    }

    /// Like [`TradingEnv::new`] but episodes begin at row `start`. Rows
    /// before it serve only as history, e.g. for the turbulence estimate,
    /// which lets an evaluation episode cover exactly a test split.
    pub fn with_start(frame: Arc<MarketFrame>, config: EnvConfig, start: usize) -> Result<Self, EnvError> {
        let n = frame.n_assets();
        config.validate(n)?;
        for name in [MACD, RSI] {
            if frame.indicator(name).is_none() {
                return Err(EnvError::MissingIndicator(name.to_string()));
            }
        }
        if start < config.gate.warm_up() {
            return Err(EnvError::InsufficientHistory { required: config.gate.warm_up(), available: start });
        }
        if frame.len() < start + 2 {
            return Err(EnvError::FrameTooShort(format!(
                "{} bars leave no steps after starting at row {start}",
                frame.len()
            )));
        }
        let turbulence = turbulence::turbulence_series(frame.close(), &config.gate)?;
        let mut fill_order: Vec<usize> = (0..n).collect();
        fill_order.sort_by(|a, b| frame.tickers()[*a].cmp(&frame.tickers()[*b]));
        let mut env = Self {
            frame,
            fill_order,
            turbulence,
            start,
            row: start,
            book: Book::new(config.initial_capital, n),
            values: Vec::new(),
            done: false,
            trace: EpisodeTrace::default(),
            config,
        };
        env.reset();
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn frame(&self) -> &Arc<MarketFrame> {
        &self.frame
    }

    pub fn n_assets(&self) -> usize {
        self.frame.n_assets()
    }

    pub fn observation_len(&self) -> usize {
        1 + 4 * self.n_assets()
    }

    /// Number of steps in a full episode.
    pub fn episode_len(&self) -> usize {
        self.frame.len() - self.start - 1
    }

    /// Bars consumed before the initial state.
    pub fn warm_up(&self) -> usize {
        self.start
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn state(&self) -> PortfolioState {
        PortfolioState {
            step_index: self.row - self.start,
            balance: self.book.balance,
            holdings: self.book.holdings.clone(),
            prices: self.frame.close().row(self.row).to_vec(),
        }
    }

    pub fn timestamp(&self) -> DateTime<Utc> {
        self.frame.timestamps()[self.row]
    }

    /// Trace of the current episode, one row per visited bar.
    pub fn trace(&self) -> &EpisodeTrace {
        &self.trace
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.row = self.start;
        self.book = Book::new(self.config.initial_capital, self.n_assets());
        self.values.clear();
        self.values.push(self.config.initial_capital);
        self.done = false;
        self.trace = EpisodeTrace::new(self.frame.tickers().to_vec());
        self.trace.push(self.trace_row(0.0));
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        let row = self.row;
        let mut obs = Vec::with_capacity(self.observation_len());
        obs.push(self.book.balance);
        obs.extend(self.book.holdings.iter().map(|h| *h as f64));
        obs.extend_from_slice(self.frame.close().row(row));
        obs.extend_from_slice(self.frame.indicator(MACD).expect("checked at construction").row(row));
        obs.extend_from_slice(self.frame.indicator(RSI).expect("checked at construction").row(row));
        obs
    }

    /// Converts an action to signed share orders for the current bar.
    pub fn orders_for(&self, action: &EnvAction) -> Result<Vec<i64>, EnvError> {
        let n = self.n_assets();
        let len = match action {
            EnvAction::Shares(v) => v.len(),
            EnvAction::Raw(v) => v.len(),
        };
        if len != n {
            return Err(EnvError::ActionShapeMismatch { expected: n, got: len });
        }
        match (self.config.action, action) {
            (ActionSpec::DiscreteShares { max_shares }, EnvAction::Shares(shares)) => {
                let k = max_shares as i64;
                if let Some(s) = shares.iter().find(|s| s.abs() > k) {
                    return Err(EnvError::IllegalAction(format!("{s} shares outside -{k}..={k}")));
                }
                Ok(shares.clone())
            }
            (ActionSpec::ContinuousShares { max_shares }, EnvAction::Raw(raw)) => {
                if raw.iter().any(|v| !v.is_finite()) {
                    return Err(EnvError::NonFiniteAction);
                }
                Ok(raw.iter().map(|v| (v.clamp(-1.0, 1.0) * max_shares as f64).round() as i64).collect())
            }
            (ActionSpec::SimplexWeights, EnvAction::Raw(raw)) => {
                if raw.iter().any(|v| !v.is_finite()) {
                    return Err(EnvError::NonFiniteAction);
                }
                let weights = softmax_weights(raw);
                let prices = self.frame.close().row(self.row);
                let value = self.book.value(prices);
                Ok(weights
                    .iter()
                    .zip(prices)
                    .zip(&self.book.holdings)
                    .map(|((w, p), h)| (w * value / p).floor() as i64 - *h as i64)
                    .collect())
            }
            (spec, _) => Err(EnvError::IllegalAction(format!("action kind does not match {spec:?}"))),
        }
    }

    pub fn step(&mut self, action: &EnvAction) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let orders = self.orders_for(action)?;
        let prices = self.frame.close().row(self.row);
        let value_before = self.book.value(prices);

        let turbulence = self.turbulence[self.row];
        let gated = match turbulence {
            Some(level) => apply_turbulence_gate(&orders, level, &self.config.gate, &self.book.holdings),
            None => orders.clone(),
        };
        let gate_triggered = turbulence.is_some_and(|t| self.config.gate.enabled && t >= self.config.gate.threshold);
        let fill = execute(&mut self.book, &gated, prices, &self.config.costs, &self.fill_order);

        self.row += 1;
        let value_after = self.book.value(self.frame.close().row(self.row));
        self.values.push(value_after);
        let reward = self.config.reward.evaluate(&self.values)?;
        self.done = self.row + 1 == self.frame.len();
        self.trace.push(self.trace_row(reward));

        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.done,
            info: StepInfo {
                executed: fill.executed,
                fees: fill.fees,
                spread_cost: fill.spread_cost,
                turbulence,
                gate_triggered,
                value_before,
                value_after,
            },
        })
    }

    fn trace_row(&self, reward: f64) -> TraceRow {
        let prices = self.frame.close().row(self.row);
        TraceRow {
            step: self.row - self.start,
            timestamp: self.frame.timestamps()[self.row],
            balance: self.book.balance,
            value: self.book.value(prices),
            reward,
            turbulence: self.turbulence[self.row],
            holdings: self.book.holdings.clone(),
        }
    }
}

/// Shifted softmax: any finite vector maps onto the probability simplex.
pub fn softmax_weights(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{compute_macd, compute_rsi, Granularity, MacdParams, Panel};
    use chrono::{Duration, TimeZone};

    fn frame(prices: &[Vec<f64>]) -> MarketFrame {
        let t = prices.len();
        let n = prices[0].len();
        let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let stamps = (0..t).map(|i| start + Duration::days(i as i64)).collect();
        let close = Panel::from_vec(t, n, prices.concat());
        let tickers = (0..n).map(|i| format!("A{i}")).collect();
        let f = MarketFrame::from_closes(tickers, stamps, Granularity::Daily, close).unwrap();
        let f = compute_macd(f, MacdParams { fast: 2, slow: 3, signal: 2 }).unwrap();
        compute_rsi(f, 2).unwrap()
    }

    fn ramp(t: usize) -> MarketFrame {
        frame(&(0..t).map(|i| vec![100.0 + i as f64]).collect::<Vec<_>>())
    }

    #[test]
    fn discrete_action_set_size() {
        let cfg = EnvConfig::single_stock(10, 1e5);
        assert_eq!(cfg.action.legal_action_count(), Some(21));
        assert!(make_env(ramp(10), cfg).is_ok());
    }

    #[test]
    fn single_stock_rejects_two_tickers() {
        let f = frame(&(0..6).map(|i| vec![10.0 + i as f64, 20.0]).collect::<Vec<_>>());
        assert!(matches!(
            make_env(f, EnvConfig::single_stock(1, 1e4)),
            Err(EnvError::TaskShapeMismatch(_))
        ));
    }

    #[test]
    fn missing_indicator() {
        let start = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let f = MarketFrame::from_closes(
            vec!["A".into()],
            (0..5).map(|i| start + Duration::days(i)).collect(),
            Granularity::Daily,
            Panel::from_vec(5, 1, vec![1.0; 5]),
        )
        .unwrap();
        assert!(matches!(make_env(f, EnvConfig::single_stock(1, 1e4)), Err(EnvError::MissingIndicator(_))));
    }

    #[test]
    fn reset_layout_and_determinism() {
        let mut env = make_env(ramp(10), EnvConfig::single_stock(5, 1e4)).unwrap();
        let a = env.reset();
        env.step(&EnvAction::Shares(vec![3])).unwrap();
        let b = env.reset();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert_eq!(a[0], 1e4);
        assert_eq!(a[1], 0.0);
        assert_eq!(a[2], 100.0);
    }

    #[test]
    fn buy_cost_with_commission() {
        let mut cfg = EnvConfig::single_stock(10, 1e4);
        cfg.costs.per_share_rate = 0.001;
        let mut env = make_env(ramp(10), cfg).unwrap();
        let out = env.step(&EnvAction::Shares(vec![10])).unwrap();
        assert!((1e4 - env.state().balance - 1001.0).abs() < 1e-9);
        assert_eq!(out.info.executed, vec![10]);
    }

    #[test]
    fn hold_reward_is_mark_to_market() {
        let mut cfg = EnvConfig::single_stock(10, 1e4);
        cfg.reward.scaling = 1.0;
        let mut env = make_env(ramp(10), cfg).unwrap();
        env.step(&EnvAction::Shares(vec![7])).unwrap();
        let out = env.step(&EnvAction::Shares(vec![0])).unwrap();
        // Price rises by 1 per bar.
        assert!((out.reward - 7.0).abs() < 1e-9);
    }

    #[test]
    fn episode_runs_to_final_bar() {
        let mut env = make_env(ramp(6), EnvConfig::single_stock(1, 1e4)).unwrap();
        let mut steps = 0;
        loop {
            steps += 1;
            if env.step(&EnvAction::Shares(vec![1])).unwrap().done {
                break;
            }
        }
        assert_eq!(steps, env.episode_len());
        assert!(matches!(env.step(&EnvAction::Shares(vec![0])), Err(EnvError::EpisodeDone)));
        assert_eq!(env.trace().rows().len(), steps + 1);
    }

    #[test]
    fn action_validation() {
        let mut env = make_env(ramp(6), EnvConfig::single_stock(2, 1e4)).unwrap();
        assert!(matches!(env.step(&EnvAction::Shares(vec![3])), Err(EnvError::IllegalAction(_))));
        assert!(matches!(
            env.step(&EnvAction::Shares(vec![1, 1])),
            Err(EnvError::ActionShapeMismatch { .. })
        ));
        let mut env = make_env(ramp(6), EnvConfig { task: TaskKind::MultiStock, ..EnvConfig::multi_stock(2, 1e4) }).unwrap();
        assert!(matches!(env.step(&EnvAction::Raw(vec![f64::NAN])), Err(EnvError::NonFiniteAction)));
    }

    #[test]
    fn simplex_targets_round_down() {
        let f = frame(&(0..6).map(|_| vec![10.0, 30.0]).collect::<Vec<_>>());
        let mut env = make_env(f, EnvConfig::portfolio(1_000.0)).unwrap();
        let out = env.step(&EnvAction::Raw(vec![0.0, 0.0])).unwrap();
        // 500 / 10 = 50 shares; 500 / 30 = 16.67 -> 16 shares.
        assert_eq!(out.info.executed, vec![50, 16]);
    }

    #[test]
    fn softmax_is_on_simplex() {
        let w = softmax_weights(&[1000.0, -1000.0, 3.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|x| *x >= 0.0));
    }
}
