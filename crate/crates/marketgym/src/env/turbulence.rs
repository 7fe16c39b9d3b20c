//! Turbulence index: Mahalanobis distance of the current return vector from
//! the trailing return distribution, and the risk gate built on it.

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::data::Panel;
use crate::linalg;

/// Risk gate that blocks buying and liquidates holdings while turbulence is at
/// or above `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TurbulenceGate {
    pub enabled: bool,
    /// Trailing return rows used to estimate the mean and covariance.
    pub lookback: usize,
    pub threshold: f64,
    /// Diagonal ridge; `None` uses `1e-8 * trace(cov) / n`.
    pub ridge: Option<f64>,
}

impl Default for TurbulenceGate {
    fn default() -> Self {
        Self { enabled: false, lookback: 252, threshold: 140.0, ridge: None }
    }
}

impl TurbulenceGate {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn validate(&self, n_assets: usize) -> Result<(), EnvError> {
        if !self.enabled {
            return Ok(());
        }
        if self.lookback < n_assets + 2 {
            return Err(EnvError::InvalidConfig(format!(
                "turbulence lookback {} must be at least n + 2 = {}",
                self.lookback,
                n_assets + 2
            )));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(EnvError::InvalidConfig("turbulence threshold must be > 0".into()));
        }
        if matches!(self.ridge, Some(r) if !(r.is_finite() && r >= 0.0)) {
            return Err(EnvError::InvalidConfig("turbulence ridge must be >= 0".into()));
        }
        Ok(())
    }

    /// Bars consumed before the first tradable step: `lookback` returns of
    /// history plus the current return.
    pub fn warm_up(&self) -> usize {
        if self.enabled {
            self.lookback + 1
        } else {
            0
        }
    }
}

/// `(y - mu)' Sigma^{-1} (y - mu)` with `mu`, `Sigma` estimated from `history`
/// (one return vector per row).
pub fn compute_turbulence(history: &[Vec<f64>], current: &[f64], ridge: Option<f64>) -> Result<f64, EnvError> {
    let n = current.len();
    if history.len() < n + 2 {
        return Err(EnvError::InsufficientHistory { required: n + 2, available: history.len() });
    }
    if history.iter().any(|r| r.len() != n) {
        return Err(EnvError::ShapeMismatch(format!("history rows must have {n} returns")));
    }
    if current.iter().chain(history.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(EnvError::NonFiniteInput);
    }
    let (mean, mut cov) = linalg::mean_and_covariance(history);
    linalg::regularize(&mut cov, n, ridge);
    let factor = linalg::cholesky(&cov, n).ok_or(EnvError::SingularCovariance)?;
    let deviation: Vec<f64> = current.iter().zip(&mean).map(|(y, m)| y - m).collect();
    if deviation.iter().all(|d| *d == 0.0) {
        return Ok(0.0);
    }
    let z = linalg::forward_substitute(&factor, n, &deviation);
    Ok(z.iter().map(|v| v * v).sum::<f64>().max(0.0))
}

/// Simple returns `p_t / p_{t-1} - 1` for rows `1..T` of `close`.
pub(crate) fn simple_returns(close: &Panel) -> Vec<Vec<f64>> {
    (1..close.rows())
        .map(|t| {
            close
                .row(t)
                .iter()
                .zip(close.row(t - 1))
                .map(|(p, q)| p / q - 1.0)
                .collect()
        })
        .collect()
}

/// Turbulence for every bar row; rows without enough history are `None`.
pub(crate) fn turbulence_series(close: &Panel, gate: &TurbulenceGate) -> Result<Vec<Option<f64>>, EnvError> {
    let returns = simple_returns(close);
    let mut out = vec![None; close.rows()];
    if !gate.enabled {
        return Ok(out);
    }
    // Bar row t has return index t - 1.
    for (t, slot) in out.iter_mut().enumerate().skip(gate.lookback + 1) {
        let r = t - 1;
        *slot = Some(compute_turbulence(&returns[r - gate.lookback..r], &returns[r], gate.ridge)?);
    }
    Ok(out)
}

/// Overrides share orders while the gate is tripped: buys are blocked and every
/// position sells `ceil(holdings / 2)` shares this step.
pub fn apply_turbulence_gate(orders: &[i64], turbulence: f64, gate: &TurbulenceGate, holdings: &[u64]) -> Vec<i64> {
    if !gate.enabled || turbulence < gate.threshold {
        return orders.to_vec();
    }
    holdings.iter().map(|h| -(h.div_ceil(2) as i64)).collect()
}
