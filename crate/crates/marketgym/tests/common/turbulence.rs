//! Turbulence against a dense nalgebra oracle: explicit mean, sample
//! covariance, ridge and matrix inverse.

use marketgym::env::compute_turbulence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ensure, sample_covariance, Outcome};

pub const TOLERANCE: f64 = 1e-9;

pub fn oracle(history: &[Vec<f64>], current: &[f64], ridge: Option<f64>) -> f64 {
    let (mean, cov) = sample_covariance(history, ridge);
    let d = nalgebra::DVector::from_column_slice(current) - mean;
    let inv = cov.try_inverse().expect("fixture covariance is invertible");
    (d.transpose() * inv * &d)[(0, 0)]
}

/// Correlated returns: a common factor plus idiosyncratic noise.
pub fn random_history(rng: &mut ChaCha8Rng, rows: usize, n: usize) -> Vec<Vec<f64>> {
    let loadings: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.5)).collect();
    (0..rows)
        .map(|_| {
            let f: f64 = rng.sample(StandardNormal);
            loadings
                .iter()
                .map(|b| 0.01 * (b * f + rng.random_range(0.3..1.0) * rng.sample::<f64, _>(StandardNormal)))
                .collect()
        })
        .collect()
}

pub fn check_random(fixtures: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..fixtures {
        let n = rng.random_range(1..=10);
        let rows = n + 2 + rng.random_range(0..60);
        let history = random_history(&mut rng, rows, n);
        let current: Vec<f64> = (0..n).map(|_| 0.02 * rng.sample::<f64, _>(StandardNormal)).collect();
        let ridge = if k % 4 == 3 { Some(rng.random_range(1e-6..1e-3)) } else { None };
        let got = compute_turbulence(&history, &current, ridge).map_err(|e| format!("fixture {k}: {e}"))?;
        let want = oracle(&history, &current, ridge);
        let err = (got - want).abs();
        ensure(err <= TOLERANCE, || format!("fixture {k} (n={n}, m={rows}): {got} vs oracle {want}"))?;
        worst = worst.max(err);
    }
    Ok(worst)
}

/// History whose column means are exactly representable: rows come in
/// `mu + d`, `mu - d` pairs of dyadic values, and the row count is a power of
/// two. Returns the history and `mu`.
pub fn mirrored_history(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let dyadic = |rng: &mut ChaCha8Rng| rng.random_range(-64i32..64) as f64 / 1024.0;
    let mu: Vec<f64> = (0..n).map(|_| dyadic(rng)).collect();
    let mut rows = Vec::with_capacity(32);
    for _ in 0..16 {
        let d: Vec<f64> = (0..n).map(|_| dyadic(rng)).collect();
        rows.push(mu.iter().zip(&d).map(|(m, d)| m + d).collect());
        rows.push(mu.iter().zip(&d).map(|(m, d)| m - d).collect());
    }
    (rows, mu)
}

pub fn check_mean_is_zero(fixtures: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..fixtures {
        let n = rng.random_range(1..=10);
        let (history, mu) = mirrored_history(&mut rng, n);
        // Skip the rare draw where the mirrored sample is degenerate.
        let Ok(value) = compute_turbulence(&history, &mu, None) else { continue };
        ensure(value == 0.0, || format!("fixture {k}: turbulence at the mean is {value}"))?;
    }
    Ok(())
}

pub fn criterion() -> Outcome {
    let worst = check_random(100, 0x7b)?;
    check_mean_is_zero(100, 0x7c)?;
    Ok(format!("100 fixtures, worst |error| {worst:.1e}; y = mu gives exactly 0"))
}
