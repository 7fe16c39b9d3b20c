//! DDPG and TD3 on a one-step bandit whose reward `-(a - 0.3)^2` peaks at
//! `a = 0.3`.
//!
//! ```text
//! cargo run --example train_ddpg_td3
//! ```

use std::time::Instant;

use marketgym::agents::toy::QuadraticBandit;
use marketgym::agents::{train_ddpg, train_td3, AgentAction, AgentConfig, Algorithm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for algorithm in [Algorithm::Ddpg, Algorithm::Td3] {
        let cfg = AgentConfig {
            hidden: vec![32, 32],
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            total_steps: 3_000,
            learning_starts: 300,
            batch_size: 64,
            normalize_observations: false,
            seed: 1,
            ..AgentConfig::new(algorithm)
        };
        let start = Instant::now();
        let mut env = QuadraticBandit::new(0.3);
        let policy = match algorithm {
            Algorithm::Ddpg => train_ddpg(&mut env, &cfg)?,
            _ => train_td3(&mut env, &cfg)?,
        };
        if let AgentAction::Continuous(a) = policy.act(&[1.0])? {
            println!("{algorithm}: action {:.4} (optimum 0.3) after {:.1?}", a[0], start.elapsed());
        }
    }
    Ok(())
}
