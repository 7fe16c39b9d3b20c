//! Optimizer oracles: the two-asset closed form, a refined simplex grid
//! search, and the large-risk-aversion limit.

use marketgym::baselines::{mean_variance_weights, min_variance_weights, minimize_on_simplex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ensure, sample_covariance, Outcome};

/// Long-only two-asset minimum variance:
/// `w1 = (s22 - s12) / (s11 + s22 - 2 s12)`, clipped to `[0, 1]`.
pub fn two_asset_closed_form(s11: f64, s22: f64, s12: f64) -> f64 {
    ((s22 - s12) / (s11 + s22 - 2.0 * s12)).clamp(0.0, 1.0)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Two return series; sometimes strongly correlated with unequal
/// volatility so the unconstrained optimum leaves the simplex.
pub fn two_asset_returns(rng: &mut ChaCha8Rng, rows: usize) -> Vec<Vec<f64>> {
    let corr_heavy = rng.random_bool(0.4);
    let (v1, v2) = (rng.random_range(0.005..0.02), rng.random_range(0.005..0.04));
    (0..rows)
        .map(|_| {
            let a = v1 * normal(rng);
            let b = if corr_heavy { 2.5 * a + 0.1 * v2 * normal(rng) } else { v2 * normal(rng) + 0.3 * a };
            vec![a, b]
        })
        .collect()
}

pub fn check_two_asset(fixtures: usize, seed: u64) -> Result<(f64, usize), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut clipped): (f64, usize) = (0.0, 0);
    for k in 0..fixtures {
        // Direct solve on a given covariance.
        let (s11, s22): (f64, f64) = (rng.random_range(0.01..1.0), rng.random_range(0.01..1.0));
        let s12 = rng.random_range(-0.95..0.95) * (s11 * s22).sqrt();
        let want = two_asset_closed_form(s11, s22, s12);
        let got = minimize_on_simplex(&[s11, s12, s12, s22], 2, &[0.0, 0.0], 1.0).weights;
        let err = (got[0] - want).abs().max((got[1] - (1.0 - want)).abs());
        ensure(err <= 1e-6, || format!("fixture {k}: w1 {} vs closed form {want}", got[0]))?;
        worst = worst.max(err);

        // Through the estimator, with its ridge replicated in the oracle.
        let rows = rng.random_range(20..260);
        let returns = two_asset_returns(&mut rng, rows);
        let (_, cov) = sample_covariance(&returns, None);
        let want = two_asset_closed_form(cov[(0, 0)], cov[(1, 1)], cov[(0, 1)]);
        clipped += usize::from(want == 0.0 || want == 1.0);
        let got = min_variance_weights(&returns).map_err(|e| e.to_string())?.into_inner();
        let err = (got[0] - want).abs();
        ensure(err <= 1e-6, || format!("fixture {k} (estimated): w1 {} vs closed form {want}", got[0]))?;
        worst = worst.max(err);
    }
    Ok((worst, clipped))
}

fn objective(cov: &[f64], mu: &[f64], lambda: f64, w: &[f64; 3]) -> f64 {
    let mut quad = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            quad += w[i] * cov[i * 3 + j] * w[j];
        }
    }
    lambda * quad - (0..3).map(|i| mu[i] * w[i]).sum::<f64>()
}

/// Grid search over `(w1, w2, 1 - w1 - w2)` at spacing 0.01, then repeated
/// local refinement at ten times finer spacing. Clamping keeps every
/// candidate on the simplex so faces and vertices stay reachable.
pub fn grid_search(cov: &[f64], mu: &[f64], lambda: f64) -> ([f64; 3], f64) {
    let point = |a: f64, b: f64| {
        let a = a.clamp(0.0, 1.0);
        let b = b.clamp(0.0, 1.0 - a);
        [a, b, (1.0 - a - b).max(0.0)]
    };
    let mut best = (point(1.0 / 3.0, 1.0 / 3.0), f64::INFINITY);
    for i in 0..=100 {
        for j in 0..=(100 - i) {
            let w = point(i as f64 / 100.0, j as f64 / 100.0);
            let f = objective(cov, mu, lambda, &w);
            if f < best.1 {
                best = (w, f);
            }
        }
    }
    let mut h = 0.01;
    while h > 1e-9 {
        h /= 10.0;
        let [a, b, _] = best.0;
        for i in -15..=15 {
            for j in -15..=15 {
                let w = point(a + i as f64 * h, b + j as f64 * h);
                let f = objective(cov, mu, lambda, &w);
                if f < best.1 {
                    best = (w, f);
                }
            }
        }
    }
    best
}

pub fn random_spd3(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a: Vec<f64> = (0..9).map(|_| 0.4 * normal(rng)).collect();
    let mut cov = vec![0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            cov[i * 3 + j] = (0..3).map(|k| a[i * 3 + k] * a[j * 3 + k]).sum::<f64>() + if i == j { 0.01 } else { 0.0 };
        }
    }
    cov
}

pub fn check_grid(fixtures: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..fixtures {
        let cov = random_spd3(&mut rng);
        let mu: Vec<f64> = (0..3).map(|_| 0.3 * normal(&mut rng)).collect();
        let lambda = rng.random_range(0.2..5.0);
        let solution = minimize_on_simplex(&cov, 3, &mu, lambda);
        let w = [solution.weights[0], solution.weights[1], solution.weights[2]];
        let recomputed = objective(&cov, &mu, lambda, &w);
        ensure((recomputed - solution.objective).abs() < 1e-12, || format!("fixture {k}: reported objective"))?;
        let (_, grid) = grid_search(&cov, &mu, lambda);
        let gap = (recomputed - grid).abs();
        ensure(gap <= 1e-6, || format!("fixture {k}: solver {recomputed} vs grid {grid}"))?;
        worst = worst.max(gap);
    }
    Ok(worst)
}

pub fn check_risk_aversion_limit(fixtures: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..fixtures {
        let n = rng.random_range(2..=6);
        let rows = n + 2 + rng.random_range(20..120);
        let returns: Vec<Vec<f64>> =
            (0..rows).map(|_| (0..n).map(|i| 0.001 * i as f64 + 0.01 * normal(&mut rng)).collect()).collect();
        let mv = mean_variance_weights(&returns, 1e6).map_err(|e| e.to_string())?.into_inner();
        let minvar = min_variance_weights(&returns).map_err(|e| e.to_string())?.into_inner();
        let diff = mv.iter().zip(&minvar).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(diff <= 1e-3, || format!("fixture {k}: max weight difference {diff}"))?;
        worst = worst.max(diff);
    }
    Ok(worst)
}

pub fn criterion() -> Outcome {
    let (two, clipped) = check_two_asset(100, 0xb1)?;
    let grid = check_grid(50, 0xb2)?;
    let limit = check_risk_aversion_limit(30, 0xb3)?;
    Ok(format!(
        "two-asset worst {two:.1e} ({clipped} clipped), grid objective gap {grid:.1e}, lambda=1e6 vs min-var {limit:.1e}"
    ))
}
