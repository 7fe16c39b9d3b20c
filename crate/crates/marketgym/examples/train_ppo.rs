//! Trains PPO on the single-stock environment, logging episodes as they
//! finish, and saves the policy.
//!
//! ```text
//! cargo run --example train_ppo [-- policy.json]
//! ```

use std::sync::Arc;

use marketgym::agents::{train_ppo_with, AgentConfig, AgentError, Algorithm, EpisodeRecord, Policy, TrainObserver};
use marketgym::cli::bundled_data_dir;
use marketgym::data::synthetic::FIXTURE_FILE;
use marketgym::data::{compute_macd, compute_rsi, ingest_csv, CsvSchema, MacdParams};
use marketgym::env::{EnvConfig, TradingEnv};

struct Printer;

impl TrainObserver for Printer {
    fn on_episode(&mut self, record: &EpisodeRecord) -> Result<(), AgentError> {
        println!("episode {:>3} ending at step {:>6}: return {:>9.4}", record.episode, record.global_step, record.episodic_return);
        Ok(())
    }

    fn on_checkpoint(&mut self, step: usize, _policy: &Policy) -> Result<(), AgentError> {
        println!("checkpoint at step {step}");
        Ok(())
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let frame = ingest_csv(bundled_data_dir().join(FIXTURE_FILE), &CsvSchema::default())?;
    let frame = frame.select_tickers(&["T01".into()])?.slice(0, 350)?;
    let frame = compute_rsi(compute_macd(frame, MacdParams::default())?, 14)?;
    let mut env = TradingEnv::new(Arc::new(frame), EnvConfig::single_stock(50, 100_000.0))?;

    let cfg = AgentConfig {
        hidden: vec![64, 64],
        total_steps: 10_000,
        rollout_len: 1024,
        checkpoint_interval: Some(5_000),
        seed: 0,
        ..AgentConfig::new(Algorithm::Ppo)
    };
    let policy = train_ppo_with(&mut env, &cfg, &mut Printer)?;
    let path = std::env::args().nth(1).unwrap_or_else(|| "out/train_ppo/policy_ppo.json".into());
    if let Some(dir) = std::path::Path::new(&path).parent() {
        std::fs::create_dir_all(dir)?;
    }
    policy.save(&path)?;
    println!("saved {} policy to {path}", policy.algorithm());
    Ok(())
}
