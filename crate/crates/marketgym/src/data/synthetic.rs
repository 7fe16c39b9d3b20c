//! Synthetic daily bars: correlated geometric Brownian motion whose common
//! drift switches between a bull and a bear regime.
//!
//! The bundled fixture `data/synthetic_30x500.csv` is produced by
//! `cargo run --example generate_synthetic` with [`SyntheticParams::default`].

use chrono::{DateTime, Datelike, Duration, NaiveDate, Utc, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Granularity, MarketFrame, OhlcvPanels, Panel, Result};

pub const FIXTURE_FILE: &str = "synthetic_30x500.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub n_tickers: usize,
    pub n_days: usize,
    /// Last trading day; earlier days walk back over weekdays.
    pub end_date: NaiveDate,
    pub seed: u64,
    pub bull_drift: f64,
    pub bear_drift: f64,
    /// Daily probability of leaving the current regime.
    pub switch_prob: f64,
    pub market_vol: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n_tickers: 30,
            n_days: 500,
            end_date: NaiveDate::from_ymd_opt(2020, 9, 23).expect("valid date"),
            seed: 20_201_001,
            bull_drift: 0.25,
            bear_drift: -0.20,
            switch_prob: 1.0 / 80.0,
            market_vol: 0.15,
        }
    }
}

pub fn ticker_name(i: usize) -> String {
    format!("T{i:02}")
}

fn weekdays_ending(end: NaiveDate, count: usize) -> Vec<DateTime<Utc>> {
    let mut days = Vec::with_capacity(count);
    let mut d = end;
    while days.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            days.push(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc());
        }
        d -= Duration::days(1);
    }
    days.reverse();
    days
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Generates a frame deterministically from `params`.
pub fn generate(params: &SyntheticParams) -> Result<MarketFrame> {
    let (t, n) = (params.n_days, params.n_tickers);
    let dt: f64 = 1.0 / 252.0;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let betas: Vec<f64> = (0..n).map(|_| rng.random_range(0.6..1.4)).collect();
    let idio: Vec<f64> = (0..n).map(|_| rng.random_range(0.12..0.30)).collect();
    let alphas: Vec<f64> = (0..n).map(|_| rng.random_range(-0.05..0.10)).collect();
    let mut prev_close: Vec<f64> = (0..n).map(|_| (rng.random_range(20.0f64..200.0) * 100.0).round() / 100.0).collect();

    let mut panels = [(); 5].map(|_| Panel::zeros(t, n));
    let mut bull = true;
    for row in 0..t {
        if rng.random::<f64>() < params.switch_prob {
            bull = !bull;
        }
        let drift = if bull { params.bull_drift } else { params.bear_drift };
        let market = params.market_vol * dt.sqrt() * normal(&mut rng);
        for col in 0..n {
            let sigma = (betas[col] * params.market_vol).hypot(idio[col]);
            let mu = betas[col] * drift + alphas[col];
            let shock = betas[col] * market + idio[col] * dt.sqrt() * normal(&mut rng);
            let log_ret = (mu - 0.5 * sigma * sigma) * dt + shock;
            let base = prev_close[col];
            let open = if row == 0 { base } else { base * (0.2 * sigma * dt.sqrt() * normal(&mut rng)).exp() };
            let close = base * log_ret.exp();
            let wick = 0.5 * sigma * dt.sqrt();
            let high = open.max(close) * (wick * normal(&mut rng).abs()).exp();
            let low = open.min(close) * (-wick * normal(&mut rng).abs()).exp();
            let volume = (1.0e6 * (0.3 * normal(&mut rng)).exp()).round();
            for (panel, v) in panels.iter_mut().zip([open, high, low, close, volume]) {
                panel.set(row, col, v);
            }
            prev_close[col] = close;
        }
    }
    let [open, high, low, close, volume] = panels;
    MarketFrame::new(
        (0..n).map(ticker_name).collect(),
        weekdays_ending(params.end_date, t),
        Granularity::Daily,
        OhlcvPanels { open, high, low, close, volume },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let params = SyntheticParams { n_tickers: 3, n_days: 50, ..Default::default() };
        let a = generate(&params).unwrap();
        let b = generate(&params).unwrap();
        assert_eq!(a, b);
        for row in 0..a.len() {
            for col in 0..a.n_assets() {
                a.bar(row, col).validate().unwrap();
            }
        }
        assert_eq!(a.timestamps().last().unwrap().date_naive(), params.end_date);
    }
}
