use std::io::Write;

use chrono::{DateTime, Utc};

use super::EnvError;
use crate::data::format_timestamp;

/// Portfolio snapshot recorded after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub timestamp: DateTime<Utc>,
    pub balance: f64,
    pub value: f64,
    pub reward: f64,
    pub turbulence: Option<f64>,
    pub holdings: Vec<u64>,
}

/// Per-step record of one episode, exportable as CSV with columns
/// `step,timestamp,balance,value,reward,turbulence,h_<ticker>...`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    tickers: Vec<String>,
    rows: Vec<TraceRow>,
}

impl EpisodeTrace {
    pub fn new(tickers: Vec<String>) -> Self {
        Self { tickers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }

    pub fn timestamps(&self) -> Vec<DateTime<Utc>> {
        self.rows.iter().map(|r| r.timestamp).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EnvError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = ["step", "timestamp", "balance", "value", "reward", "turbulence"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.tickers.iter().map(|t| format!("h_{t}")));
        wtr.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![
                row.step.to_string(),
                format_timestamp(&row.timestamp),
                row.balance.to_string(),
                row.value.to_string(),
                row.reward.to_string(),
                row.turbulence.map(|t| t.to_string()).unwrap_or_default(),
            ];
            record.extend(row.holdings.iter().map(|h| h.to_string()));
            wtr.write_record(&record)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
