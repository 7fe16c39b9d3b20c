//! Trains DQN on a two-state chain and compares the learned Q-values with
//! the exact optimum.
//!
//! ```text
//! cargo run --example train_dqn
//! ```

use marketgym::agents::toy::ChainMdp;
use marketgym::agents::{train_dqn, AgentConfig, Algorithm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = AgentConfig {
        hidden: vec![32, 32],
        total_steps: 20_000,
        learning_starts: 1_000,
        batch_size: 32,
        normalize_observations: false,
        seed: 7,
        ..AgentConfig::new(Algorithm::Dqn)
    };
    let policy = train_dqn(&mut ChainMdp::new(), &cfg)?;
    // From state 0, "advance" leads to a reward of 1 one step later while
    // "stop" pays 0.5 now; with discount g the optimum is max(g, 0.5).
    let g = cfg.gamma;
    let exact = [[g, 0.5], [1.0, 0.0]];
    for (s, q_star) in exact.iter().enumerate() {
        let q = policy.network().forward(&ChainMdp::observation_for(s))?;
        println!("state {s}: Q = [{:.4}, {:.4}], Q* = [{:.4}, {:.4}]", q[0], q[1], q_star[0], q_star[1]);
    }
    println!("greedy action in state 0: {:?}", policy.act(&ChainMdp::observation_for(0))?);
    Ok(())
}
