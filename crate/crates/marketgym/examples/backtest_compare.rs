//! Backtests a policy and two baselines on a held-out segment and writes
//! the comparison table as text and CSV plus an equity curve.
//!
//! ```text
//! cargo run --example backtest_compare [-- out_dir]
//! ```
//!
//! The policy here is a fresh, untrained actor, so the point is the
//! plumbing rather than the numbers; see `train_ppo` for a trained one.

use std::path::PathBuf;
use std::sync::Arc;

use marketgym::agents::{ActionSpace, ActorCriticAgent, AgentConfig, Algorithm, Environment, Policy, PolicyHead};
use marketgym::backtest::{compare, run_backtest_from, Actor, MetricsReport};
use marketgym::baselines::{Strategy, StrategyConfig};
use marketgym::cli::{bundled_data_dir, write_atomic};
use marketgym::data::synthetic::FIXTURE_FILE;
use marketgym::data::{compute_macd, compute_rsi, ingest_csv, CsvSchema, MacdParams};
use marketgym::env::{EnvConfig, TradingEnv};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out/backtest_compare"));
    let frame = ingest_csv(bundled_data_dir().join(FIXTURE_FILE), &CsvSchema::default())?;
    let tickers: Vec<String> = (0..5).map(|i| format!("T{i:02}")).collect();
    let frame = Arc::new(compute_rsi(compute_macd(frame.select_tickers(&tickers)?, MacdParams::default())?, 14)?);
    let config = EnvConfig::multi_stock(100, 1_000_000.0);
    let test_start = 400;

    let env = TradingEnv::new(frame.clone(), config.clone())?;
    let agent_cfg = AgentConfig::new(Algorithm::Td3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let space = Environment::action_space(&env);
    let ActionSpace::Continuous { dim } = space else { unreachable!("multi-stock actions are continuous") };
    let agent = ActorCriticAgent::new(Algorithm::Td3, env.observation_len(), dim, &agent_cfg, &mut rng)?;
    let policy = Policy::new(Algorithm::Td3, space, PolicyHead::Deterministic, agent.actor().clone(), None);

    let mut reports = Vec::new();
    let run = run_backtest_from(Actor::Policy(&policy), frame.clone(), &config, test_start)?;
    let mut curve_csv = Vec::new();
    run.curve.write_csv(&mut curve_csv)?;
    write_atomic(&out.join("equity_td3.csv"), &curve_csv)?;
    reports.push(MetricsReport::from_curve("TD3 (untrained)", &run.curve, Some(0)));

    let min_var = StrategyConfig::new(Strategy::MinVariance { window: 252 }).with_rebalance(21);
    let index = StrategyConfig::new(Strategy::BuyAndHold).with_label("Index proxy");
    for strategy in [&min_var, &index] {
        let run = run_backtest_from(Actor::Strategy(strategy), frame.clone(), &config, test_start)?;
        reports.push(MetricsReport::from_curve(strategy.label(), &run.curve, None));
    }

    let table = compare(&reports)?;
    print!("{}", table.render_text());
    write_atomic(&out.join("comparison.txt"), table.render_text().as_bytes())?;
    write_atomic(&out.join("comparison.csv"), table.render_csv()?.as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}
