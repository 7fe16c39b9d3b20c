//! Conventional comparison strategies traded through the same fill engine
//! as the environments, so costs, spread and integer-share rounding match.

mod optimize;

pub use optimize::{
    mean_variance_weights, min_variance_weights, minimize_on_simplex, project_to_simplex, SimplexSolution,
    WeightVector, MAX_ITERATIONS, STEP_TOLERANCE,
};

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::MarketFrame;
use crate::env::{execute, Book, CostModel, EnvError, EpisodeTrace, TraceRow};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("need {required} rows of history, have {available}")]
    InsufficientHistory { required: usize, available: usize },
    #[error("invalid strategy config: {0}")]
    InvalidConfig(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("covariance matrix is singular")]
    SingularCovariance,
    #[error(transparent)]
    Env(#[from] EnvError),
}

pub const DEFAULT_LOOKBACK: usize = 63;
pub const DEFAULT_WINDOW: usize = 252;
pub const DEFAULT_REBALANCE: usize = 21;

fn default_lookback() -> usize {
    DEFAULT_LOOKBACK
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

fn default_rebalance() -> usize {
    DEFAULT_REBALANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Equal-weight purchase on the first step, never rebalanced.
    BuyAndHold,
    /// Equal weights, restored at every rebalance.
    EqualWeighted,
    /// Equal weights over the `top_k` best trailing returns; `top_k`
    /// defaults to a third of the assets, rounded up.
    Momentum {
        #[serde(default = "default_lookback")]
        lookback: usize,
        #[serde(default)]
        top_k: Option<usize>,
    },
    MeanVariance {
        risk_aversion: f64,
        #[serde(default = "default_window")]
        window: usize,
    },
    MinVariance {
        #[serde(default = "default_window")]
        window: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    #[serde(flatten)]
    pub strategy: Strategy,
    /// Steps between rebalances; ignored by buy-and-hold.
    #[serde(default = "default_rebalance")]
    pub rebalance_every: usize,
    /// Column name in reports.
    #[serde(default)]
    pub label: Option<String>,
}

impl StrategyConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self { strategy, rebalance_every: DEFAULT_REBALANCE, label: None }
    }

    pub fn with_rebalance(mut self, every: usize) -> Self {
        self.rebalance_every = every;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        match self.strategy {
            Strategy::BuyAndHold => "Buy and hold",
            Strategy::EqualWeighted => "Equal weight",
            Strategy::Momentum { .. } => "Momentum",
            Strategy::MeanVariance { .. } => "Mean-Var.",
            Strategy::MinVariance { .. } => "Min-Var.",
        }
        .to_string()
    }

    /// Rows of history needed before the first trade.
    pub fn required_history(&self) -> usize {
        match self.strategy {
            Strategy::BuyAndHold | Strategy::EqualWeighted => 0,
            Strategy::Momentum { lookback, .. } => lookback,
            Strategy::MeanVariance { window, .. } | Strategy::MinVariance { window } => window,
        }
    }

    pub fn validate(&self, n_assets: usize) -> Result<(), BaselineError> {
        let bad = |msg: String| Err(BaselineError::InvalidConfig(msg));
        if self.rebalance_every == 0 {
            return bad("rebalance_every must be >= 1".into());
        }
        match self.strategy {
            Strategy::Momentum { lookback, top_k } => {
                if lookback == 0 {
                    return bad("momentum lookback must be >= 1".into());
                }
                if let Some(k) = top_k {
                    if k == 0 || k > n_assets {
                        return bad(format!("top_k {k} must be in 1..={n_assets}"));
                    }
                }
            }
            Strategy::MeanVariance { risk_aversion, window } => {
                if !(risk_aversion.is_finite() && risk_aversion >= 0.0) {
                    return bad(format!("risk aversion {risk_aversion} must be >= 0"));
                }
                if window < n_assets + 2 {
                    return bad(format!("window {window} must be at least n + 2 = {}", n_assets + 2));
                }
            }
            Strategy::MinVariance { window } => {
                if window < n_assets + 2 {
                    return bad(format!("window {window} must be at least n + 2 = {}", n_assets + 2));
                }
            }
            Strategy::BuyAndHold | Strategy::EqualWeighted => {}
        }
        Ok(())
    }
}

/// Asset indices sorted by trailing simple return `p_t / p_{t-lookback} - 1`,
/// best first; ties go to the alphabetically earlier ticker.
pub fn momentum_ranking(frame: &MarketFrame, t: usize, lookback: usize) -> Result<Vec<usize>, BaselineError> {
    if t < lookback || t >= frame.len() {
        return Err(BaselineError::InsufficientHistory { required: lookback, available: t.min(frame.len()) });
    }
    let now = frame.close().row(t);
    let then = frame.close().row(t - lookback);
    let trailing: Vec<f64> = now.iter().zip(then).map(|(a, b)| a / b - 1.0).collect();
    let tickers = frame.tickers();
    let mut order: Vec<usize> = (0..frame.n_assets()).collect();
    order.sort_by(|a, b| trailing[*b].total_cmp(&trailing[*a]).then_with(|| tickers[*a].cmp(&tickers[*b])));
    Ok(order)
}

/// `window x n` simple returns ending at row `t`.
fn trailing_returns(frame: &MarketFrame, t: usize, window: usize) -> Vec<Vec<f64>> {
    (t + 1 - window..=t)
        .map(|r| {
            frame.close().row(r).iter().zip(frame.close().row(r - 1)).map(|(a, b)| a / b - 1.0).collect()
        })
        .collect()
}

/// Target weights at row `t`.
pub fn target_weights(frame: &MarketFrame, config: &StrategyConfig, t: usize) -> Result<WeightVector, BaselineError> {
    let n = frame.n_assets();
    match config.strategy {
        Strategy::BuyAndHold | Strategy::EqualWeighted => Ok(WeightVector::equal(n)),
        Strategy::Momentum { lookback, top_k } => {
            let k = top_k.unwrap_or(n.div_ceil(3));
            let ranking = momentum_ranking(frame, t, lookback)?;
            let mut w = vec![0.0; n];
            for i in &ranking[..k] {
                w[*i] = 1.0 / k as f64;
            }
            WeightVector::new(w)
        }
        Strategy::MeanVariance { risk_aversion, window } => {
            check_history(t, window)?;
            mean_variance_weights(&trailing_returns(frame, t, window), risk_aversion)
        }
        Strategy::MinVariance { window } => {
            check_history(t, window)?;
            min_variance_weights(&trailing_returns(frame, t, window))
        }
    }
}

fn check_history(t: usize, window: usize) -> Result<(), BaselineError> {
    if t < window {
        return Err(BaselineError::InsufficientHistory { required: window, available: t });
    }
    Ok(())
}

/// Runs the strategy from the first row at which its estimation window is
/// filled to the end of the frame.
pub fn run_strategy(
    frame: &MarketFrame,
    config: &StrategyConfig,
    capital: f64,
    costs: &CostModel,
) -> Result<EpisodeTrace, BaselineError> {
    run_strategy_window(frame, config.required_history()..frame.len(), config, capital, costs)
}

/// Trades over `rows` (first row is the initial state); rows before
/// `rows.start` are history only. Weights become share targets
/// `floor(w * v / p)` at the pre-trade portfolio value, exactly as in the
/// portfolio-allocation environment.
pub fn run_strategy_window(
    frame: &MarketFrame,
    rows: Range<usize>,
    config: &StrategyConfig,
    capital: f64,
    costs: &CostModel,
) -> Result<EpisodeTrace, BaselineError> {
    let n = frame.n_assets();
    config.validate(n)?;
    costs.validate()?;
    if rows.start < config.required_history() {
        return Err(BaselineError::InsufficientHistory {
            required: config.required_history(),
            available: rows.start,
        });
    }
    if rows.end > frame.len() || rows.end < rows.start + 2 {
        return Err(BaselineError::InvalidConfig(format!(
            "rows {rows:?} must hold at least two bars of a {}-bar frame",
            frame.len()
        )));
    }
    let mut fill_order: Vec<usize> = (0..n).collect();
    fill_order.sort_by(|a, b| frame.tickers()[*a].cmp(&frame.tickers()[*b]));

    let mut book = Book::new(capital, n);
    let mut trace = EpisodeTrace::new(frame.tickers().to_vec());
    let row = |step: usize, t: usize, book: &Book, reward: f64| TraceRow {
        step,
        timestamp: frame.timestamps()[t],
        balance: book.balance,
        value: book.value(frame.close().row(t)),
        reward,
        turbulence: None,
        holdings: book.holdings.clone(),
    };
    trace.push(row(0, rows.start, &book, 0.0));
    let mut value = capital;
    for t in rows.start..rows.end - 1 {
        let k = t - rows.start;
        let trade = match config.strategy {
            Strategy::BuyAndHold => k == 0,
            _ => k % config.rebalance_every == 0,
        };
        if trade {
            let weights = target_weights(frame, config, t)?;
            let prices = frame.close().row(t);
            let v = book.value(prices);
            let orders: Vec<i64> = weights
                .as_slice()
                .iter()
                .zip(prices)
                .zip(&book.holdings)
                .map(|((w, p), h)| (w * v / p).floor() as i64 - *h as i64)
                .collect();
            execute(&mut book, &orders, prices, costs, &fill_order);
        }
        let next = book.value(frame.close().row(t + 1));
        trace.push(row(k + 1, t + 1, &book, next - value));
        value = next;
    }
    Ok(trace)
}
