//! Bar data: ingestion, alignment, technical indicators, resampling and
//! chronological splitting.

mod csv_io;
mod indicators;
mod resample;
mod split;
pub mod synthetic;

pub use csv_io::{format_timestamp, ingest_csv, ingest_reader, parse_timestamp, write_canonical_csv, AlignPolicy, CsvSchema};
pub use indicators::{compute_macd, compute_rsi, ema, rsi_series, MacdParams, MACD, MACD_SIGNAL, RSI};
pub use resample::resample;
pub use split::{rolling_windows, split, SplitSpec, TimeRange};

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate bar for {ticker} at {timestamp}")]
    DuplicateBar { ticker: String, timestamp: DateTime<Utc> },
    #[error("no timestamp is shared by all tickers")]
    EmptyIntersection,
    #[error("series too short: need more than {required} rows, have {available}")]
    SeriesTooShort { required: usize, available: usize },
    #[error("cannot resample {from} data to finer granularity {to}")]
    CannotUpsample { from: Granularity, to: Granularity },
    #[error("{0} split selects no timestamps")]
    EmptySplit(&'static str),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("window of {required} steps does not fit in {available} timestamps")]
    WindowTooLarge { required: usize, available: usize },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Sampling interval of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Minute,
    Hourly,
    Daily,
}

impl Granularity {
    /// Conventional number of periods per year, used for annualization.
    pub fn periods_per_year(self) -> f64 {
        match self {
            Granularity::Daily => 252.0,
            Granularity::Hourly => 252.0 * 6.5,
            Granularity::Minute => 252.0 * 390.0,
        }
    }

    fn nominal(self) -> Duration {
        match self {
            Granularity::Minute => Duration::minutes(1),
            Granularity::Hourly => Duration::hours(1),
            Granularity::Daily => Duration::days(1),
        }
    }

    /// Whether `ts` sits on a boundary of this granularity.
    fn is_aligned(self, ts: &DateTime<Utc>) -> bool {
        match self {
            Granularity::Minute => ts.second() == 0 && ts.nanosecond() == 0,
            Granularity::Hourly => ts.minute() == 0 && ts.second() == 0 && ts.nanosecond() == 0,
            // Daily bars may carry any time-of-day stamp (e.g. the close).
            Granularity::Daily => true,
        }
    }

    /// Guesses a granularity from the smallest gap between consecutive stamps.
    pub fn infer(timestamps: &[DateTime<Utc>]) -> Granularity {
        let min_gap = timestamps
            .windows(2)
            .map(|w| w[1] - w[0])
            .min()
            .unwrap_or_else(|| Duration::days(1));
        if min_gap < Duration::hours(1) {
            Granularity::Minute
        } else if min_gap < Duration::days(1) {
            Granularity::Hourly
        } else {
            Granularity::Daily
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Granularity::Minute => "minute",
            Granularity::Hourly => "hourly",
            Granularity::Daily => "daily",
        };
        f.write_str(s)
    }
}

/// One OHLCV observation for a single asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub ticker: String,
    pub timestamp: DateTime<Utc>,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Bar {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err("prices must be finite and strictly positive".into());
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return Err("volume must be finite and non-negative".into());
        }
        if self.low > self.high {
            return Err(format!("low {} exceeds high {}", self.low, self.high));
        }
        if self.open < self.low || self.open > self.high {
            return Err(format!("open {} outside [low, high]", self.open));
        }
        if self.close < self.low || self.close > self.high {
            return Err(format!("close {} outside [low, high]", self.close));
        }
        Ok(())
    }
}

/// Dense row-major `rows x cols` matrix of `f64`, one row per timestamp and
/// one column per ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Panel {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "panel data length");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn set_column(&mut self, col: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (r, v) in values.iter().enumerate() {
            self.set(r, col, *v);
        }
    }

    pub fn slice_rows(&self, start: usize, end: usize) -> Panel {
        Panel {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Aligned multi-asset bar data. Every `(timestamp, ticker)` cell is populated.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketFrame {
    tickers: Vec<String>,
    timestamps: Vec<DateTime<Utc>>,
    granularity: Granularity,
    open: Panel,
    high: Panel,
    low: Panel,
    close: Panel,
    volume: Panel,
    indicators: BTreeMap<String, Panel>,
}

/// Price and volume panels for [`MarketFrame::new`].
#[derive(Debug, Clone)]
pub struct OhlcvPanels {
    pub open: Panel,
    pub high: Panel,
    pub low: Panel,
    pub close: Panel,
    pub volume: Panel,
}

impl MarketFrame {
    pub fn new(
        tickers: Vec<String>,
        timestamps: Vec<DateTime<Utc>>,
        granularity: Granularity,
        panels: OhlcvPanels,
    ) -> Result<Self> {
        let (t, n) = (timestamps.len(), tickers.len());
        if t == 0 || n == 0 {
            return Err(DataError::InvalidFrame("frame must have at least one row and one ticker".into()));
        }
        for (name, p) in [
            ("open", &panels.open),
            ("high", &panels.high),
            ("low", &panels.low),
            ("close", &panels.close),
            ("volume", &panels.volume),
        ] {
            if p.rows() != t || p.cols() != n {
                return Err(DataError::InvalidFrame(format!(
                    "{name} panel is {}x{}, expected {t}x{n}",
                    p.rows(),
                    p.cols()
                )));
            }
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[0] >= w[1]) {
            return Err(DataError::InvalidFrame(format!(
                "timestamps not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(ts) = timestamps.iter().find(|ts| !granularity.is_aligned(ts)) {
            return Err(DataError::InvalidFrame(format!("timestamp {ts} not aligned to {granularity} bars")));
        }
        if granularity == Granularity::Daily {
            if let Some(w) = timestamps.windows(2).find(|w| w[0].date_naive() == w[1].date_naive()) {
                return Err(DataError::InvalidFrame(format!("two daily bars on {}", w[0].date_naive())));
            }
        } else if let Some(w) = timestamps.windows(2).find(|w| w[1] - w[0] < granularity.nominal()) {
            return Err(DataError::InvalidFrame(format!(
                "gap between {} and {} is finer than {granularity}",
                w[0], w[1]
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = tickers.iter().find(|tk| !seen.insert(tk.as_str())) {
            return Err(DataError::InvalidFrame(format!("ticker {dup} listed twice")));
        }
        Ok(Self {
            tickers,
            timestamps,
            granularity,
            open: panels.open,
            high: panels.high,
            low: panels.low,
            close: panels.close,
            volume: panels.volume,
            indicators: BTreeMap::new(),
        })
    }

    /// Builds a frame where every bar has open = high = low = close.
    pub fn from_closes(
        tickers: Vec<String>,
        timestamps: Vec<DateTime<Utc>>,
        granularity: Granularity,
        close: Panel,
    ) -> Result<Self> {
        let volume = Panel::zeros(close.rows(), close.cols());
        let panels = OhlcvPanels {
            open: close.clone(),
            high: close.clone(),
            low: close.clone(),
            close,
            volume,
        };
        Self::new(tickers, timestamps, granularity, panels)
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    /// Number of assets.
    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Number of timestamps.
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn open(&self) -> &Panel {
        &self.open
    }

    pub fn high(&self) -> &Panel {
        &self.high
    }

    pub fn low(&self) -> &Panel {
        &self.low
    }

    pub fn close(&self) -> &Panel {
        &self.close
    }

    pub fn volume(&self) -> &Panel {
        &self.volume
    }

    pub fn indicator(&self, name: &str) -> Option<&Panel> {
        self.indicators.get(name)
    }

    pub fn indicator_names(&self) -> impl Iterator<Item = &str> {
        self.indicators.keys().map(String::as_str)
    }

    /// Returns a copy of the frame with `panel` attached under `name`.
    pub fn with_indicator(mut self, name: impl Into<String>, panel: Panel) -> Result<Self> {
        if panel.rows() != self.len() || panel.cols() != self.n_assets() {
            return Err(DataError::InvalidFrame(format!(
                "indicator panel is {}x{}, expected {}x{}",
                panel.rows(),
                panel.cols(),
                self.len(),
                self.n_assets()
            )));
        }
        if panel.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(DataError::InvalidFrame("indicator values must be finite".into()));
        }
        self.indicators.insert(name.into(), panel);
        Ok(self)
    }

    /// Bar for `(row, col)`.
    pub fn bar(&self, row: usize, col: usize) -> Bar {
        Bar {
            ticker: self.tickers[col].clone(),
            timestamp: self.timestamps[row],
            open: self.open.get(row, col),
            high: self.high.get(row, col),
            low: self.low.get(row, col),
            close: self.close.get(row, col),
            volume: self.volume.get(row, col),
        }
    }

    /// Rows `[start, end)` as a new frame, indicators included.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(DataError::InvalidFrame(format!(
                "row range {start}..{end} invalid for frame of {} rows",
                self.len()
            )));
        }
        Ok(Self {
            tickers: self.tickers.clone(),
            timestamps: self.timestamps[start..end].to_vec(),
            granularity: self.granularity,
            open: self.open.slice_rows(start, end),
            high: self.high.slice_rows(start, end),
            low: self.low.slice_rows(start, end),
            close: self.close.slice_rows(start, end),
            volume: self.volume.slice_rows(start, end),
            indicators: self
                .indicators
                .iter()
                .map(|(k, p)| (k.clone(), p.slice_rows(start, end)))
                .collect(),
        })
    }

    /// The listed tickers, in the given order, with their indicator columns.
    pub fn select_tickers(&self, tickers: &[String]) -> Result<Self> {
        let cols = tickers
            .iter()
            .map(|tk| {
                self.tickers
                    .iter()
                    .position(|have| have == tk)
                    .ok_or_else(|| DataError::InvalidFrame(format!("ticker {tk} not in frame")))
            })
            .collect::<Result<Vec<_>>>()?;
        let pick = |p: &Panel| {
            let mut data = Vec::with_capacity(p.rows() * cols.len());
            for r in 0..p.rows() {
                data.extend(cols.iter().map(|c| p.get(r, *c)));
            }
            Panel::from_vec(p.rows(), cols.len(), data)
        };
        let mut frame = Self::new(
            tickers.to_vec(),
            self.timestamps.clone(),
            self.granularity,
            OhlcvPanels {
                open: pick(&self.open),
                high: pick(&self.high),
                low: pick(&self.low),
                close: pick(&self.close),
                volume: pick(&self.volume),
            },
        )?;
        frame.indicators = self.indicators.iter().map(|(k, p)| (k.clone(), pick(p))).collect();
        Ok(frame)
    }

    /// Half-open time range covering rows `[start, end)`.
    pub fn range_for_rows(&self, start: usize, end: usize) -> TimeRange {
        let start_ts = self.timestamps[start];
        let end_ts = if end < self.len() {
            self.timestamps[end]
        } else {
            self.timestamps[self.len() - 1] + Duration::seconds(1)
        };
        TimeRange::new(start_ts, end_ts)
    }

    /// Index of the first timestamp `>= ts`, or `len()` when none.
    pub fn lower_bound(&self, ts: DateTime<Utc>) -> usize {
        self.timestamps.partition_point(|t| *t < ts)
    }

    /// Concatenates frames with identical tickers in chronological order.
    pub fn concat(parts: &[&MarketFrame]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| DataError::InvalidFrame("nothing to concatenate".into()))?;
        let n = first.n_assets();
        let mut timestamps = Vec::new();
        let mut buffers: [Vec<f64>; 5] = Default::default();
        let mut indicator_buf: BTreeMap<String, Vec<f64>> =
            first.indicators.keys().map(|k| (k.clone(), Vec::new())).collect();
        for part in parts {
            if part.tickers != first.tickers || part.granularity != first.granularity {
                return Err(DataError::InvalidFrame("frames disagree on tickers or granularity".into()));
            }
            timestamps.extend_from_slice(&part.timestamps);
            for (buf, panel) in buffers
                .iter_mut()
                .zip([&part.open, &part.high, &part.low, &part.close, &part.volume])
            {
                buf.extend_from_slice(panel.as_slice());
            }
            for (name, buf) in indicator_buf.iter_mut() {
                let panel = part
                    .indicators
                    .get(name)
                    .ok_or_else(|| DataError::InvalidFrame(format!("indicator {name} missing in a part")))?;
                buf.extend_from_slice(panel.as_slice());
            }
        }
        let t = timestamps.len();
        let [open, high, low, close, volume] = buffers.map(|b| Panel::from_vec(t, n, b));
        let mut frame = Self::new(
            first.tickers.clone(),
            timestamps,
            first.granularity,
            OhlcvPanels { open, high, low, close, volume },
        )?;
        for (name, buf) in indicator_buf {
            frame.indicators.insert(name, Panel::from_vec(t, n, buf));
        }
        Ok(frame)
    }
}
