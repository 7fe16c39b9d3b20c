//! Metric oracles: brute-force drawdown and two-pass moments.

use chrono::{Duration, TimeZone, Utc};
use marketgym::backtest::{annualized_std, max_drawdown, sharpe_ratio, EquityCurve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ensure, Outcome};

pub const MOMENT_TOLERANCE: f64 = 1e-12;

pub fn curve(values: &[f64]) -> EquityCurve {
    let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
    let stamps = (0..values.len()).map(|i| t0 + Duration::days(i as i64)).collect();
    EquityCurve::new(stamps, values.to_vec(), 252.0).unwrap()
}

/// Every (peak, later trough) pair.
pub fn drawdown_oracle(values: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..values.len() {
        for j in i..values.len() {
            worst = worst.max((values[i] - values[j]) / values[i]);
        }
    }
    worst
}

/// Two-pass mean and sample standard deviation of simple returns.
pub fn moments_oracle(values: &[f64]) -> (f64, f64) {
    let r: Vec<f64> = values.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    let m = r.len() as f64;
    let mean = r.iter().sum::<f64>() / m;
    let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

pub fn random_curve(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let vol = rng.random_range(0.001..0.05);
    let drift = rng.random_range(-0.002..0.002);
    let mut v = rng.random_range(1e3..1e6);
    (0..len)
        .map(|_| {
            let out = v;
            v *= 1.0 + drift + rng.random_range(-vol..vol);
            out
        })
        .collect()
}

pub fn check_random(curves: usize, seed: u64) -> Result<(f64, f64), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_std, mut worst_sharpe): (f64, f64) = (0.0, 0.0);
    for k in 0..curves {
        let len = rng.random_range(3..=2000);
        let values = random_curve(&mut rng, len);
        let c = curve(&values);
        let (dd, want) = (max_drawdown(&c), drawdown_oracle(&values));
        ensure(dd == want, || format!("curve {k}: drawdown {dd} vs brute force {want}"))?;

        let (mean, std) = moments_oracle(&values);
        let ann = 252f64.sqrt();
        let got_std = annualized_std(&c).map_err(|e| e.to_string())?;
        let got_sharpe = sharpe_ratio(&c, 0.0).map_err(|e| e.to_string())?;
        let (e_std, e_sharpe) = ((got_std - std * ann).abs(), (got_sharpe - mean / std * ann).abs());
        ensure(e_std <= MOMENT_TOLERANCE, || format!("curve {k}: std error {e_std:e}"))?;
        ensure(e_sharpe <= MOMENT_TOLERANCE, || format!("curve {k}: Sharpe error {e_sharpe:e}"))?;
        worst_std = worst_std.max(e_std);
        worst_sharpe = worst_sharpe.max(e_sharpe);
    }
    Ok((worst_std, worst_sharpe))
}

pub fn check_hand_cases() -> Result<(), String> {
    let dd = max_drawdown(&curve(&[100.0, 50.0, 75.0]));
    ensure(dd == 0.5, || format!("{{100, 50, 75}} drawdown {dd}"))?;
    // Returns of 2%, 4%, 6% and 8%: mean 0.05, sample variance 1/1500.
    let mut values = vec![100.0];
    for r in [0.02, 0.04, 0.06, 0.08] {
        values.push(values[values.len() - 1] * (1.0 + r));
    }
    let want = 0.05 * 1500f64.sqrt() * 252f64.sqrt();
    let got = sharpe_ratio(&curve(&values), 0.0).map_err(|e| e.to_string())?;
    ensure((got - want).abs() < 1e-9, || format!("2/4/6/8% Sharpe {got} vs {want}"))
}

pub fn criterion() -> Outcome {
    check_hand_cases()?;
    let (std, sharpe) = check_random(200, 0xd0)?;
    Ok(format!("200 curves, drawdown exact, worst std error {std:.1e}, worst Sharpe error {sharpe:.1e}"))
}
