//! Metric reports and publication-style comparison tables.

use std::io::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::metrics::{annualized_return, annualized_std, max_drawdown, sharpe_ratio};
use super::{BacktestError, EquityCurve};
use crate::data::{format_timestamp, parse_timestamp};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The five standard metrics for one strategy plus identifying metadata.
/// `annualized_std` and `sharpe` are `None` when undefined (too few
/// returns, or zero variance for the Sharpe ratio).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub name: String,
    pub start: String,
    pub end: String,
    pub seed: Option<u64>,
    pub periods: usize,
    pub periods_per_year: f64,
    pub initial_value: f64,
    pub final_value: f64,
    pub annualized_return: f64,
    pub annualized_std: Option<f64>,
    pub sharpe: Option<f64>,
    pub max_drawdown: f64,
}

impl MetricsReport {
    pub fn from_curve(name: impl Into<String>, curve: &EquityCurve, seed: Option<u64>) -> Self {
        let stamps = curve.timestamps();
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            name: name.into(),
            start: format_timestamp(&stamps[0]),
            end: format_timestamp(&stamps[stamps.len() - 1]),
            seed,
            periods: curve.periods(),
            periods_per_year: curve.periods_per_year(),
            initial_value: curve.initial_value(),
            final_value: curve.final_value(),
            annualized_return: annualized_return(curve),
            annualized_std: annualized_std(curve).ok(),
            sharpe: sharpe_ratio(curve, 0.0).ok(),
            max_drawdown: max_drawdown(curve),
        }
    }

    pub fn to_json(&self) -> Result<String, BacktestError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a report, rejecting other schema versions.
    pub fn from_json(text: &str) -> Result<Self, BacktestError> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let found = raw.get("schema_version").and_then(serde_json::Value::as_u64);
        if found != Some(REPORT_SCHEMA_VERSION as u64) {
            return Err(BacktestError::SchemaVersion { found, expected: REPORT_SCHEMA_VERSION });
        }
        Ok(serde_json::from_value(raw)?)
    }

    fn start_time(&self) -> Option<DateTime<Utc>> {
        parse_timestamp(&self.start)
    }

    fn end_time(&self) -> Option<DateTime<Utc>> {
        parse_timestamp(&self.end)
    }
}

/// Whole currency units with thousands separators: `127044.4` renders as
/// `127,044`.
pub fn format_currency(value: f64) -> String {
    let rounded = value.round();
    let digits = format!("{:.0}", rounded.abs());
    let mut out = String::with_capacity(digits.len() + digits.len() / 3 + 1);
    if rounded < 0.0 {
        out.push('-');
    }
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// A fraction as a percentage with two decimals: `0.1489` renders as `14.89%`.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.2}%", fraction * 100.0)
}

/// Two decimals, or `n/a` when undefined.
pub fn format_ratio(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"))
}

pub const ROW_LABELS: [&str; 6] =
    ["Initial value", "Final value", "Annualized return", "Annualized Std", "Sharpe ratio", "Max drawdown"];

/// Side-by-side metrics, one column per report in the given order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    period: String,
    columns: Vec<MetricsReport>,
}

/// Builds a comparison table. The corner cell shows the covered period,
/// taken from the earliest start and latest end among the reports.
pub fn compare(reports: &[MetricsReport]) -> Result<ComparisonTable, BacktestError> {
    if reports.is_empty() {
        return Err(BacktestError::EmptyComparison);
    }
    let start = reports.iter().filter_map(MetricsReport::start_time).min();
    let end = reports.iter().filter_map(MetricsReport::end_time).max();
    let period = match (start, end) {
        (Some(s), Some(e)) => format!("{}-{}", s.format("%Y/%m/%d"), e.format("%Y/%m/%d")),
        _ => "Metric".to_string(),
    };
    Ok(ComparisonTable { period, columns: reports.to_vec() })
}

impl ComparisonTable {
    pub fn period(&self) -> &str {
        &self.period
    }

    pub fn columns(&self) -> &[MetricsReport] {
        &self.columns
    }

    /// Header row followed by the six metric rows, as formatted cells.
    pub fn cells(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::with_capacity(7);
        let mut header = vec![self.period.clone()];
        header.extend(self.columns.iter().map(|r| r.name.clone()));
        rows.push(header);
        for (i, label) in ROW_LABELS.iter().enumerate() {
            let mut row = vec![label.to_string()];
            row.extend(self.columns.iter().map(|r| match i {
                0 => format_currency(r.initial_value),
                1 => format_currency(r.final_value),
                2 => format_percent(r.annualized_return),
                3 => r.annualized_std.map_or_else(|| "n/a".into(), format_percent),
                4 => format_ratio(r.sharpe),
                _ => format_percent(r.max_drawdown),
            }));
            rows.push(row);
        }
        rows
    }

    /// Aligned plain text: labels left-aligned, values right-aligned.
    pub fn render_text(&self) -> String {
        let cells = self.cells();
        let n_cols = cells[0].len();
        let widths: Vec<usize> =
            (0..n_cols).map(|c| cells.iter().map(|row| row[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &cells {
            let mut line = format!("{:<width$}", row[0], width = widths[0]);
            for (cell, width) in row.iter().zip(&widths).skip(1) {
                line.push_str(&format!("  {cell:>width$}"));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), BacktestError> {
        let mut wtr = csv::Writer::from_writer(writer);
        for row in self.cells() {
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn render_csv(&self) -> Result<String, BacktestError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}
