//! The five performance metrics over an [`EquityCurve`].

use super::{BacktestError, EquityCurve};

/// Compound annual growth: `(v_T / v_0)^(A / T) - 1`.
pub fn annualized_return(curve: &EquityCurve) -> f64 {
    let growth = curve.final_value() / curve.initial_value();
    growth.powf(curve.periods_per_year() / curve.periods() as f64) - 1.0
}

/// Streaming mean and sample variance.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn sample_variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }
}

fn return_stats(curve: &EquityCurve, risk_free: f64) -> Result<(f64, f64), BacktestError> {
    let mut acc = Welford::default();
    for w in curve.values().windows(2) {
        acc.push(w[1] / w[0] - 1.0 - risk_free);
    }
    let variance = acc.sample_variance().ok_or(BacktestError::TooFewReturns { have: acc.count })?;
    Ok((acc.mean, variance.max(0.0).sqrt()))
}

/// Sample standard deviation of simple per-period returns, times `sqrt(A)`.
pub fn annualized_std(curve: &EquityCurve) -> Result<f64, BacktestError> {
    let (_, std) = return_stats(curve, 0.0)?;
    Ok(std * curve.periods_per_year().sqrt())
}

/// Treats a standard deviation as zero when it is indistinguishable from
/// rounding noise on the mean.
fn is_zero_spread(std: f64, mean: f64) -> bool {
    std <= 64.0 * f64::EPSILON * mean.abs()
}

/// `mean(r - rf) / std(r) * sqrt(A)` over simple per-period returns, with a
/// per-period risk-free rate.
pub fn sharpe_ratio(curve: &EquityCurve, risk_free: f64) -> Result<f64, BacktestError> {
    let (mean, std) = return_stats(curve, risk_free)?;
    if is_zero_spread(std, mean) {
        return Err(BacktestError::ZeroVariance);
    }
    Ok(mean / std * curve.periods_per_year().sqrt())
}

/// Sharpe ratio of dollar value changes `v_t - v_{t-1}`, annualized.
/// Matches the dollar-difference reward and drives checkpoint selection.
pub fn dollar_sharpe(values: &[f64], periods_per_year: f64) -> Result<f64, BacktestError> {
    let mut acc = Welford::default();
    for w in values.windows(2) {
        acc.push(w[1] - w[0]);
    }
    let variance = acc.sample_variance().ok_or(BacktestError::TooFewReturns { have: acc.count })?;
    let std = variance.max(0.0).sqrt();
    if is_zero_spread(std, acc.mean) {
        return Err(BacktestError::ZeroVariance);
    }
    Ok(acc.mean / std * periods_per_year.sqrt())
}

/// Largest peak-to-trough decline as a fraction of the peak.
pub fn max_drawdown(curve: &EquityCurve) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for v in curve.values() {
        peak = peak.max(*v);
        worst = worst.max((peak - v) / peak);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};

    fn curve(values: &[f64]) -> EquityCurve {
        let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let stamps = (0..values.len()).map(|i| t0 + Duration::days(i as i64)).collect();
        EquityCurve::new(stamps, values.to_vec(), 252.0).unwrap()
    }

    #[test]
    fn drawdown_hand_case() {
        assert_eq!(max_drawdown(&curve(&[100.0, 50.0, 75.0])), 0.5);
        assert_eq!(max_drawdown(&curve(&[1.0, 2.0, 2.0, 3.0])), 0.0);
    }

    #[test]
    fn flat_return_is_zero_and_doubling_over_a_year_is_one() {
        assert_eq!(annualized_return(&curve(&[5.0, 7.0, 5.0])), 0.0);
        let mut values = vec![100.0];
        let g = 2f64.powf(1.0 / 252.0);
        for i in 0..252 {
            values.push(values[i] * g);
        }
        assert!((annualized_return(&curve(&values)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn alternating_returns_std() {
        let mut values = vec![100.0];
        for i in 0..10 {
            let r = if i % 2 == 0 { 0.01 } else { -0.01 };
            values.push(values[i] * (1.0 + r));
        }
        // Ten returns alternating +-1%: mean 0, sample variance 10 * 1e-4 / 9.
        let expected = (1e-3 / 9.0f64).sqrt() * 252f64.sqrt();
        assert!((annualized_std(&curve(&values)).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn flat_curve_has_no_sharpe() {
        assert!(matches!(sharpe_ratio(&curve(&[10.0, 10.0, 10.0]), 0.0), Err(BacktestError::ZeroVariance)));
        assert!(matches!(sharpe_ratio(&curve(&[10.0, 11.0]), 0.0), Err(BacktestError::TooFewReturns { .. })));
    }
}
