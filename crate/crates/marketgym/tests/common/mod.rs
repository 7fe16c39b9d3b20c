//! Criterion suites shared by the focused integration tests and the
//! `acceptance` runner. Each suite returns a one-line summary on success and
//! a description of the first failure otherwise.
#![allow(dead_code)]

pub mod accounting;
pub mod baselines;
pub mod convergence;
pub mod demos;
pub mod determinism;
pub mod formatting;
pub mod gradients;
pub mod metrics;
pub mod turbulence;

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use marketgym::data::{compute_macd, compute_rsi, Granularity, MacdParams, MarketFrame, Panel};
use rand::Rng;

pub type Outcome = Result<String, String>;

/// Daily frame from a `T x n` close matrix, with MACD and RSI attached.
pub fn frame_from_closes(closes: &[Vec<f64>]) -> Arc<MarketFrame> {
    let (t, n) = (closes.len(), closes[0].len());
    let t0 = Utc.with_ymd_and_hms(2021, 1, 4, 0, 0, 0).unwrap();
    let stamps = (0..t).map(|i| t0 + Duration::days(i as i64)).collect();
    let tickers = (0..n).map(|i| format!("X{i}")).collect();
    let close = Panel::from_vec(t, n, closes.concat());
    let frame = MarketFrame::from_closes(tickers, stamps, Granularity::Daily, close).unwrap();
    let frame = compute_macd(frame, MacdParams::default()).unwrap();
    Arc::new(compute_rsi(frame, 14).unwrap())
}

/// Random-walk closes with per-step moves of up to `vol` in either direction.
pub fn random_closes<R: Rng>(rng: &mut R, t: usize, n: usize, vol: f64) -> Vec<Vec<f64>> {
    let mut price: Vec<f64> = (0..n).map(|_| rng.random_range(5.0..200.0)).collect();
    (0..t)
        .map(|_| {
            let row = price.clone();
            for p in &mut price {
                *p *= 1.0 + rng.random_range(-vol..vol);
            }
            row
        })
        .collect()
}

/// Mean, sample (m - 1) covariance, with the optional diagonal ridge; `None`
/// adds `1e-8 * trace / n` like the library's default conditioning.
pub fn sample_covariance(rows: &[Vec<f64>], ridge: Option<f64>) -> (nalgebra::DVector<f64>, nalgebra::DMatrix<f64>) {
    let (m, n) = (rows.len(), rows[0].len());
    let data = nalgebra::DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let mean = data.row_mean().transpose();
    let centered = nalgebra::DMatrix::from_fn(m, n, |i, j| data[(i, j)] - mean[j]);
    let mut cov = centered.transpose() * &centered / (m as f64 - 1.0);
    let eps = ridge.unwrap_or(1e-8 * cov.trace() / n as f64);
    for i in 0..n {
        cov[(i, i)] += eps;
    }
    (mean, cov)
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
