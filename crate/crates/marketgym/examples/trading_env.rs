//! Steps the multi-stock environment with random actions under a cost
//! model and prints the per-step accounting.
//!
//! ```text
//! cargo run --example trading_env
//! ```

use std::sync::Arc;

use marketgym::cli::bundled_data_dir;
use marketgym::data::synthetic::FIXTURE_FILE;
use marketgym::data::{compute_macd, compute_rsi, ingest_csv, CsvSchema, MacdParams};
use marketgym::env::{CostModel, EnvAction, EnvConfig, TradingEnv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frame = ingest_csv(bundled_data_dir().join(FIXTURE_FILE), &CsvSchema::default())?;
    let frame = frame.select_tickers(&["T04".into(), "T09".into()])?.slice(0, 60)?;
    let frame = compute_rsi(compute_macd(frame, MacdParams::default())?, 14)?;

    let mut config = EnvConfig::multi_stock(100, 50_000.0);
    config.costs = CostModel { flat_fee: 1.0, per_share_rate: 0.001, half_spread: 0.02 };
    let mut env = TradingEnv::new(Arc::new(frame), config)?;
    let obs = env.reset();
    println!("observation length {} = 1 + 4 x {} assets", obs.len(), env.n_assets());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:>4} {:>12} {:>8} {:>8} {:>12} {:>10}", "step", "executed", "fees", "spread", "value", "reward");
    while !env.is_done() {
        let action = EnvAction::Raw((0..2).map(|_| rng.random_range(-1.0..1.0)).collect());
        let out = env.step(&action)?;
        let step = env.state().step_index;
        if step % 10 == 1 || out.done {
            println!(
                "{step:>4} {:>12} {:>8.2} {:>8.2} {:>12.2} {:>10.4}",
                format!("{:?}", out.info.executed),
                out.info.fees,
                out.info.spread_cost,
                out.info.value_after,
                out.reward
            );
        }
    }
    let mut csv = Vec::new();
    env.trace().write_csv(&mut csv)?;
    println!("trace CSV header: {}", String::from_utf8(csv)?.lines().next().unwrap_or(""));
    Ok(())
}
