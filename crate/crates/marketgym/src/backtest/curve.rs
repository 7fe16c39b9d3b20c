use std::io::Write;

use chrono::{DateTime, Utc};

use super::BacktestError;
use crate::data::format_timestamp;
use crate::env::EpisodeTrace;

/// Portfolio values `v_0..v_T` at strictly increasing timestamps, with the
/// number of periods per year used for annualization.
#[derive(Debug, Clone, PartialEq)]
pub struct EquityCurve {
    timestamps: Vec<DateTime<Utc>>,
    values: Vec<f64>,
    periods_per_year: f64,
}

impl EquityCurve {
    pub fn new(timestamps: Vec<DateTime<Utc>>, values: Vec<f64>, periods_per_year: f64) -> Result<Self, BacktestError> {
        if values.len() < 2 {
            return Err(BacktestError::InvalidCurve("a curve needs at least two values".into()));
        }
        if timestamps.len() != values.len() {
            return Err(BacktestError::InvalidCurve(format!(
                "{} timestamps for {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(BacktestError::InvalidCurve(format!("value {v} is not strictly positive")));
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BacktestError::InvalidCurve("timestamps must be strictly increasing".into()));
        }
        if !(periods_per_year.is_finite() && periods_per_year > 0.0) {
            return Err(BacktestError::InvalidCurve("periods per year must be positive".into()));
        }
        Ok(Self { timestamps, values, periods_per_year })
    }

    pub fn from_trace(trace: &EpisodeTrace, periods_per_year: f64) -> Result<Self, BacktestError> {
        Self::new(trace.timestamps(), trace.values(), periods_per_year)
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn periods_per_year(&self) -> f64 {
        self.periods_per_year
    }

    /// Number of periods `T`; one less than the number of values.
    pub fn periods(&self) -> usize {
        self.values.len() - 1
    }

    pub fn initial_value(&self) -> f64 {
        self.values[0]
    }

    pub fn final_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Simple per-period returns `v_t / v_{t-1} - 1`.
    pub fn returns(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
    }

    /// Writes `timestamp,value` lines under a header.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "timestamp,value")?;
        for (t, v) in self.timestamps.iter().zip(&self.values) {
            writeln!(writer, "{},{}", format_timestamp(t), v)?;
        }
        Ok(())
    }
}
