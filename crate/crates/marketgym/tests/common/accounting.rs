//! Per-step accounting identity on randomized episodes. Cash, holdings,
//! fees and spread are all recomputed from the executed quantities, so the
//! check does not trust the environment's own bookkeeping.

use std::time::Instant;

use marketgym::env::{CostModel, EnvAction, EnvConfig, RewardSpec, TradingEnv, TurbulenceGate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ensure, frame_from_closes, random_closes, Outcome};

pub const TOLERANCE: f64 = 1e-9;

fn random_costs(rng: &mut ChaCha8Rng) -> CostModel {
    let pick = |rng: &mut ChaCha8Rng, hi: f64| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..hi) };
    CostModel { flat_fee: pick(rng, 5.0), per_share_rate: pick(rng, 0.01), half_spread: pick(rng, 0.2) }
}

fn random_config(rng: &mut ChaCha8Rng, n: usize) -> EnvConfig {
    let capital = rng.random_range(1_000.0..100_000.0);
    let mut cfg = match rng.random_range(0..3) {
        _ if n == 1 && rng.random_bool(0.5) => EnvConfig::single_stock(rng.random_range(1..100), capital),
        0 => EnvConfig::portfolio(capital),
        _ => EnvConfig::multi_stock(rng.random_range(1..200), capital),
    };
    cfg.reward = RewardSpec::delta_value();
    cfg.costs = random_costs(rng);
    if rng.random_bool(0.3) {
        // Low thresholds so the gate actually fires in some episodes.
        cfg.gate = TurbulenceGate {
            enabled: true,
            lookback: n + 2 + rng.random_range(0..6),
            threshold: rng.random_range(0.5..2.0 * n as f64 + 4.0),
            ridge: None,
        };
    }
    cfg
}

fn random_action(rng: &mut ChaCha8Rng, cfg: &EnvConfig, n: usize) -> EnvAction {
    use marketgym::env::ActionSpec;
    match cfg.action {
        ActionSpec::DiscreteShares { max_shares } => {
            let k = max_shares as i64;
            EnvAction::Shares((0..n).map(|_| rng.random_range(-k..=k)).collect())
        }
        ActionSpec::ContinuousShares { .. } => EnvAction::Raw((0..n).map(|_| rng.random_range(-1.5..1.5)).collect()),
        ActionSpec::SimplexWeights => EnvAction::Raw((0..n).map(|_| rng.random_range(-3.0..3.0)).collect()),
    }
}

fn dot(h: &[u64], p: &[f64]) -> f64 {
    h.iter().zip(p).map(|(h, p)| *h as f64 * p).sum()
}

/// Runs `episodes` random episodes; returns the worst identity residual.
pub fn check(episodes: usize, seed: u64) -> Result<(f64, usize, usize), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let (mut steps, mut gated) = (0, 0);
    for episode in 0..episodes {
        let n = rng.random_range(1..=6);
        let cfg = random_config(&mut rng, n);
        let t = cfg.gate.warm_up() + rng.random_range(30..60);
        let frame = frame_from_closes(&random_closes(&mut rng, t, n, 0.05));
        let mut env = TradingEnv::new(frame, cfg.clone()).map_err(|e| format!("episode {episode}: {e}"))?;
        let c = cfg.costs;
        while !env.is_done() {
            let before = env.state();
            let action = random_action(&mut rng, &cfg, n);
            let out = env.step(&action).map_err(|e| format!("episode {episode}: {e}"))?;
            let after = env.state();
            let info = &out.info;
            let fail = |what: &str| format!("episode {episode} step {}: {what}", before.step_index);

            let (mut cash_delta, mut fees, mut spread) = (0.0, 0.0, 0.0);
            for i in 0..n {
                let e = info.executed[i];
                ensure(after.holdings[i] as i64 == before.holdings[i] as i64 + e, || fail("holdings"))?;
                if e == 0 {
                    continue;
                }
                let q = e.unsigned_abs() as f64;
                let price = if e > 0 { before.prices[i] + c.half_spread } else { (before.prices[i] - c.half_spread).max(0.0) };
                let fee = c.flat_fee + c.per_share_rate * q * price;
                fees += fee;
                spread += q * (before.prices[i] - price).abs();
                cash_delta += if e > 0 { -q * price } else { q * price } - fee;
            }
            let close = |a: f64, b: f64| (a - b).abs() <= TOLERANCE;
            ensure(close(info.fees, fees), || fail(&format!("fees {} vs {fees}", info.fees)))?;
            ensure(close(info.spread_cost, spread), || fail(&format!("spread {} vs {spread}", info.spread_cost)))?;
            ensure(close(after.balance - before.balance, cash_delta), || fail("cash"))?;
            ensure(after.balance >= 0.0, || fail("negative cash"))?;

            let v0 = before.balance + dot(&before.holdings, &before.prices);
            let v1 = after.balance + dot(&after.holdings, &after.prices);
            ensure(close(info.value_before, v0) && close(info.value_after, v1), || fail("reported values"))?;
            let dp: Vec<f64> = after.prices.iter().zip(&before.prices).map(|(a, b)| a - b).collect();
            let residual = (v1 - v0 - (dot(&after.holdings, &dp) - fees - spread)).abs();
            ensure(residual <= TOLERANCE, || fail(&format!("identity residual {residual:e}")))?;
            worst = worst.max(residual);
            steps += 1;
            gated += usize::from(info.gate_triggered);
        }
    }
    Ok((worst, steps, gated))
}

pub fn criterion() -> Outcome {
    let start = Instant::now();
    let (worst, steps, gated) = check(1_000, 0xacc0)?;
    ensure(gated > 0, || "the turbulence gate never fired".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed.as_secs_f64() < 30.0, || format!("took {elapsed:?}"))?;
    Ok(format!("1000 episodes, {steps} steps ({gated} gated), worst residual {worst:.1e}, {:.1}s", elapsed.as_secs_f64()))
}
