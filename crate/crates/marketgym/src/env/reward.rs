use serde::{Deserialize, Serialize};

use super::EnvError;

/// Reward emitted on the transition `v_t -> v_{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardKind {
    DeltaValue,
    LogReturn,
    /// Sharpe ratio of dollar value changes over the trailing `window` steps.
    TrailingSharpe { window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    #[serde(flatten)]
    pub kind: RewardKind,
    pub scaling: f64,
}

impl RewardSpec {
    /// Dollar change scaled by 1e-4 so typical rewards are O(1).
    pub fn delta_value() -> Self {
        Self { kind: RewardKind::DeltaValue, scaling: 1e-4 }
    }

    pub fn log_return() -> Self {
        Self { kind: RewardKind::LogReturn, scaling: 1.0 }
    }

    pub fn trailing_sharpe(window: usize) -> Self {
        Self { kind: RewardKind::TrailingSharpe { window }, scaling: 1.0 }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.scaling.is_finite() && self.scaling > 0.0) {
            return Err(EnvError::InvalidConfig(format!("reward scaling must be > 0, got {}", self.scaling)));
        }
        if let RewardKind::TrailingSharpe { window } = self.kind {
            if window < 2 {
                return Err(EnvError::InvalidConfig("trailing Sharpe window must be >= 2".into()));
            }
        }
        Ok(())
    }

    /// Reward for the newest transition in `values` (the episode's value
    /// history so far, including the new value).
    pub(crate) fn evaluate(&self, values: &[f64]) -> Result<f64, EnvError> {
        let n = values.len();
        debug_assert!(n >= 2);
        let raw = match self.kind {
            RewardKind::DeltaValue => reward_delta_value(values[n - 2], values[n - 1]),
            RewardKind::LogReturn => reward_log_return(values[n - 2], values[n - 1])?,
            RewardKind::TrailingSharpe { window } => {
                let start = n.saturating_sub(window + 1);
                match reward_trailing_sharpe(&values[start..], window) {
                    Ok(s) => s,
                    // Too few differences early in the episode.
                    Err(EnvError::WindowTooShort { .. }) => 0.0,
                    Err(e) => return Err(e),
                }
            }
        };
        Ok(raw * self.scaling)
    }
}

pub fn reward_delta_value(value: f64, next_value: f64) -> f64 {
    next_value - value
}

pub fn reward_log_return(value: f64, next_value: f64) -> Result<f64, EnvError> {
    if !(value > 0.0 && next_value > 0.0) {
        return Err(EnvError::NonPositiveValue(value.min(next_value)));
    }
    Ok((next_value / value).ln())
}

/// `mean(R) / std(R)` over the last `window` dollar differences
/// `R_t = v_t - v_{t-1}` of `values`, with sample standard deviation.
/// Zero variance yields 0.
pub fn reward_trailing_sharpe(values: &[f64], window: usize) -> Result<f64, EnvError> {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let take = diffs.len().min(window);
    if take < 2 {
        return Err(EnvError::WindowTooShort { available: take });
    }
    let tail = &diffs[diffs.len() - take..];
    let mean = tail.iter().sum::<f64>() / take as f64;
    let var = tail.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (take - 1) as f64;
    if var == 0.0 {
        return Ok(0.0);
    }
    Ok(mean / var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_and_log() {
        assert_eq!(reward_delta_value(100_000.0, 100_500.0), 500.0);
        assert_eq!(reward_log_return(100.0, 100.0).unwrap(), 0.0);
        assert!((reward_log_return(100.0, 100.0 * std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(reward_log_return(0.0, 1.0), Err(EnvError::NonPositiveValue(_))));
    }

    #[test]
    fn sharpe_degenerate_cases() {
        assert_eq!(reward_trailing_sharpe(&[1.0, 2.0, 3.0, 4.0], 3).unwrap(), 0.0);
        assert_eq!(reward_trailing_sharpe(&[0.0, 1.0, 0.0], 2).unwrap(), 0.0);
        assert!(matches!(reward_trailing_sharpe(&[1.0, 2.0], 5), Err(EnvError::WindowTooShort { .. })));
    }

    #[test]
    fn sharpe_hand_case() {
        // R = {2, 4, 6, 8}: mean 5, sample variance 20/3.
        let v = [0.0, 2.0, 6.0, 12.0, 20.0];
        let s = reward_trailing_sharpe(&v, 4).unwrap();
        assert!((s - 5.0 / (20.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s - 1.9365).abs() < 1e-4);
    }
}
