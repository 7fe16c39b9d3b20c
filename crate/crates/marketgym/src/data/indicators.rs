//! MACD and RSI over close prices.
//!
//! Both indicators need a warm-up. Rows before the first fully-defined value
//! are backfilled with that value so downstream observations never see NaN.

use super::{DataError, MarketFrame, Panel, Result};

pub const MACD: &str = "macd";
pub const MACD_SIGNAL: &str = "macd_signal";
pub const RSI: &str = "rsi";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacdParams {
    pub fast: usize,
    pub slow: usize,
    pub signal: usize,
}

impl Default for MacdParams {
    fn default() -> Self {
        Self { fast: 12, slow: 26, signal: 9 }
    }
}

/// Exponential moving average with smoothing `2 / (period + 1)`, seeded by the
/// simple mean of the first `period` values. Entries before index
/// `period - 1` repeat the seed.
pub fn ema(values: &[f64], period: usize) -> Result<Vec<f64>> {
    if period == 0 || values.len() < period {
        return Err(DataError::SeriesTooShort { required: period.saturating_sub(1), available: values.len() });
    }
    let alpha = 2.0 / (period as f64 + 1.0);
    let seed = values[..period].iter().sum::<f64>() / period as f64;
    let mut out = vec![seed; values.len()];
    let mut prev = seed;
    for (i, &v) in values.iter().enumerate().skip(period) {
        prev = alpha * v + (1.0 - alpha) * prev;
        out[i] = prev;
    }
    Ok(out)
}

fn macd_series(close: &[f64], params: MacdParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let fast = ema(close, params.fast)?;
    let slow = ema(close, params.slow)?;
    let warm = params.slow.max(params.fast) - 1;
    let mut line: Vec<f64> = fast.iter().zip(&slow).map(|(f, s)| f - s).collect();
    let first_valid = line[warm];
    line[..warm].fill(first_valid);
    let signal = ema(&line, params.signal)?;
    Ok((line, signal))
}

/// Adds `macd` (fast EMA minus slow EMA of close) and `macd_signal` (EMA of the
/// MACD line) to the frame.
pub fn compute_macd(frame: MarketFrame, params: MacdParams) -> Result<MarketFrame> {
    if params.fast == 0 || params.slow == 0 || params.signal == 0 {
        return Err(DataError::InvalidFrame("MACD periods must be positive".into()));
    }
    let t = frame.len();
    if t <= params.slow || t < params.signal {
        return Err(DataError::SeriesTooShort { required: params.slow, available: t });
    }
    let n = frame.n_assets();
    let mut line = Panel::zeros(t, n);
    let mut signal = Panel::zeros(t, n);
    for col in 0..n {
        let (l, s) = macd_series(&frame.close().column(col), params)?;
        line.set_column(col, &l);
        signal.set_column(col, &s);
    }
    frame.with_indicator(MACD, line)?.with_indicator(MACD_SIGNAL, signal)
}

/// Wilder RSI of a single series. The first `period` price changes seed the
/// average gain and loss; afterwards `avg = (avg * (period - 1) + x) / period`.
///
/// A window with neither gains nor losses yields 50.
pub fn rsi_series(close: &[f64], period: usize) -> Result<Vec<f64>> {
    if period == 0 || close.len() <= period {
        return Err(DataError::SeriesTooShort { required: period, available: close.len() });
    }
    let p = period as f64;
    let rsi_of = |gain: f64, loss: f64| {
        if loss == 0.0 {
            if gain == 0.0 {
                50.0
            } else {
                100.0
            }
        } else {
            100.0 - 100.0 / (1.0 + gain / loss)
        }
    };
    let mut gain = 0.0;
    let mut loss = 0.0;
    for w in close[..=period].windows(2) {
        let d = w[1] - w[0];
        gain += d.max(0.0);
        loss += (-d).max(0.0);
    }
    gain /= p;
    loss /= p;
    let mut out = vec![rsi_of(gain, loss); close.len()];
    for i in period + 1..close.len() {
        let d = close[i] - close[i - 1];
        gain = (gain * (p - 1.0) + d.max(0.0)) / p;
        loss = (loss * (p - 1.0) + (-d).max(0.0)) / p;
        out[i] = rsi_of(gain, loss).clamp(0.0, 100.0);
    }
    Ok(out)
}

/// Adds the `rsi` indicator to the frame.
pub fn compute_rsi(frame: MarketFrame, period: usize) -> Result<MarketFrame> {
    let t = frame.len();
    if period == 0 || t <= period {
        return Err(DataError::SeriesTooShort { required: period, available: t });
    }
    let n = frame.n_assets();
    let mut panel = Panel::zeros(t, n);
    for col in 0..n {
        panel.set_column(col, &rsi_series(&frame.close().column(col), period)?);
    }
    frame.with_indicator(RSI, panel)
}
