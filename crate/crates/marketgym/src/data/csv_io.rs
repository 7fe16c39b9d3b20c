use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Bar, DataError, Granularity, MarketFrame, OhlcvPanels, Panel, Result};

/// How tickers with different timestamp sets are aligned.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignPolicy {
    /// Keep only timestamps present for every ticker.
    #[default]
    Intersect,
    /// Keep the union of timestamps after the last ticker's first bar and
    /// carry the previous close forward as a flat, zero-volume bar.
    ForwardFill,
}

/// Maps the logical bar fields onto CSV header names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub ticker: String,
    pub timestamp: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub volume: String,
    /// `None` infers the granularity from the timestamp spacing.
    pub granularity: Option<Granularity>,
    pub align: AlignPolicy,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            ticker: "ticker".into(),
            timestamp: "timestamp".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: "volume".into(),
            granularity: None,
            align: AlignPolicy::Intersect,
        }
    }
}

impl CsvSchema {
    fn columns(&self) -> [&str; 7] {
        [
            &self.ticker,
            &self.timestamp,
            &self.open,
            &self.high,
            &self.low,
            &self.close,
            &self.volume,
        ]
    }
}

/// Parses an ISO-8601 instant. Values without an offset are taken as UTC and
/// bare dates as midnight UTC.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
        return Some(ts.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(naive.and_utc());
        }
    }
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|naive| naive.and_utc())
}

/// RFC 3339 UTC rendering used by every CSV this crate writes.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
}

/// Reads a bar CSV from disk.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<MarketFrame> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ingest_reader(file, schema)
}

/// Reads bars from any CSV source and aligns them into a frame.
pub fn ingest_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<MarketFrame> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 7];
    for (slot, name) in index.iter_mut().zip(schema.columns()) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))?;
    }

    let mut by_ticker: BTreeMap<String, BTreeMap<DateTime<Utc>, Bar>> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| DataError::MalformedRow { line, reason };
        let field = |i: usize| record.get(index[i]).unwrap_or("");
        let number = |i: usize, name: &str| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| malformed(format!("{name} value `{}` is not a number", field(i))))
        };
        let ticker = field(0).to_string();
        if ticker.is_empty() {
            return Err(malformed("empty ticker".into()));
        }
        let timestamp = parse_timestamp(field(1))
            .ok_or_else(|| malformed(format!("unparseable timestamp `{}`", field(1))))?;
        let bar = Bar {
            ticker: ticker.clone(),
            timestamp,
            open: number(2, "open")?,
            high: number(3, "high")?,
            low: number(4, "low")?,
            close: number(5, "close")?,
            volume: number(6, "volume")?,
        };
        bar.validate().map_err(malformed)?;
        let series = by_ticker.entry(ticker.clone()).or_default();
        if series.insert(timestamp, bar).is_some() {
            return Err(DataError::DuplicateBar { ticker, timestamp });
        }
    }
    if by_ticker.is_empty() {
        return Err(DataError::EmptyIntersection);
    }
    align(by_ticker, schema)
}

fn align(by_ticker: BTreeMap<String, BTreeMap<DateTime<Utc>, Bar>>, schema: &CsvSchema) -> Result<MarketFrame> {
    let tickers: Vec<String> = by_ticker.keys().cloned().collect();
    let timestamps: Vec<DateTime<Utc>> = match schema.align {
        AlignPolicy::Intersect => {
            let mut iter = by_ticker.values();
            let mut common: BTreeSet<DateTime<Utc>> = iter.next().map(|s| s.keys().copied().collect()).unwrap_or_default();
            for series in iter {
                common.retain(|ts| series.contains_key(ts));
            }
            common.into_iter().collect()
        }
        AlignPolicy::ForwardFill => {
            let start = by_ticker
                .values()
                .filter_map(|s| s.keys().next().copied())
                .max()
                .expect("non-empty tickers");
            let all: BTreeSet<DateTime<Utc>> = by_ticker.values().flat_map(|s| s.keys().copied()).collect();
            all.into_iter().filter(|ts| *ts >= start).collect()
        }
    };
    if timestamps.is_empty() {
        return Err(DataError::EmptyIntersection);
    }
    let (t, n) = (timestamps.len(), tickers.len());
    let mut panels = [(); 5].map(|_| Panel::zeros(t, n));
    for (col, series) in by_ticker.values().enumerate() {
        let mut last: Option<&Bar> = None;
        for (row, ts) in timestamps.iter().enumerate() {
            let values = match series.get(ts) {
                Some(bar) => {
                    last = Some(bar);
                    [bar.open, bar.high, bar.low, bar.close, bar.volume]
                }
                None => {
                    // Forward-fill path only: the bar before `ts` exists because
                    // alignment starts after every ticker's first bar.
                    let prev = series
                        .range(..*ts)
                        .next_back()
                        .map(|(_, b)| b)
                        .or(last)
                        .expect("forward fill has a prior bar");
                    [prev.close, prev.close, prev.close, prev.close, 0.0]
                }
            };
            for (panel, v) in panels.iter_mut().zip(values) {
                panel.set(row, col, v);
            }
        }
    }
    let granularity = schema.granularity.unwrap_or_else(|| Granularity::infer(&timestamps));
    let [open, high, low, close, volume] = panels;
    MarketFrame::new(tickers, timestamps, granularity, OhlcvPanels { open, high, low, close, volume })
}

/// Writes the canonical CSV: `ticker,timestamp,open,high,low,close,volume`,
/// rows sorted by `(timestamp, ticker)`.
pub fn write_canonical_csv<W: Write>(frame: &MarketFrame, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["ticker", "timestamp", "open", "high", "low", "close", "volume"])?;
    let mut order: Vec<usize> = (0..frame.n_assets()).collect();
    order.sort_by(|a, b| frame.tickers()[*a].cmp(&frame.tickers()[*b]));
    for row in 0..frame.len() {
        let ts = format_timestamp(&frame.timestamps()[row]);
        for &col in &order {
            wtr.write_record([
                frame.tickers()[col].clone(),
                ts.clone(),
                frame.open().get(row, col).to_string(),
                frame.high().get(row, col).to_string(),
                frame.low().get(row, col).to_string(),
                frame.close().get(row, col).to_string(),
                frame.volume().get(row, col).to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|source| DataError::Io { path: "<writer>".into(), source })?;
    Ok(())
}
