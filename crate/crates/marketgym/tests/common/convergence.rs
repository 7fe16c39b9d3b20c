//! Fixed-seed convergence of each training loop on fixtures with known
//! optima. Oracles (value iteration, analytic optima) are computed here,
//! independently of the library.

use std::time::{Duration, Instant};

use marketgym::agents::toy::{ChainMdp, NoisyBandit, QuadraticBandit};
use marketgym::agents::{train_ddpg, train_dqn, train_ppo, train_td3, AgentAction, AgentConfig, Algorithm, Policy};

use super::{ensure, Outcome};

pub const TIME_LIMIT: Duration = Duration::from_secs(60);

/// Q* for the two-state chain by value iteration on its transition table.
pub fn chain_q_star(gamma: f64) -> [[f64; 2]; 2] {
    // (state, action) -> (next state or terminal, reward)
    let table = |s: usize, a: usize| -> (Option<usize>, f64) {
        match (s, a) {
            (0, 0) => (Some(1), 0.0),
            (0, 1) => (None, 0.5),
            (1, 0) => (None, 1.0),
            _ => (None, 0.0),
        }
    };
    let mut q = [[0.0_f64; 2]; 2];
    for _ in 0..1000 {
        let mut next = q;
        for s in 0..2 {
            for a in 0..2 {
                let (ns, r) = table(s, a);
                next[s][a] = r + ns.map_or(0.0, |n| gamma * q[n][0].max(q[n][1]));
            }
        }
        q = next;
    }
    q
}

pub fn network_output(policy: &Policy, obs: &[f64]) -> Vec<f64> {
    let input = match policy.normalizer() {
        Some(n) => n.normalize(obs),
        None => obs.to_vec(),
    };
    policy.network().forward(&input).unwrap()
}

fn timed<T>(f: impl FnOnce() -> T) -> Result<(T, Duration), String> {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    ensure(elapsed < TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok((out, elapsed))
}

pub fn dqn_chain() -> Outcome {
    let cfg = AgentConfig {
        hidden: vec![32, 32],
        total_steps: 20_000,
        learning_starts: 1_000,
        batch_size: 32,
        normalize_observations: false,
        seed: 7,
        ..AgentConfig::new(Algorithm::Dqn)
    };
    let (policy, elapsed) = timed(|| train_dqn(&mut ChainMdp::new(), &cfg))?;
    let policy = policy.map_err(|e| e.to_string())?;
    let q_star = chain_q_star(cfg.gamma);
    let mut worst: f64 = 0.0;
    for s in 0..2 {
        let q = network_output(&policy, &ChainMdp::observation_for(s));
        for a in 0..2 {
            worst = worst.max((q[a] - q_star[s][a]).abs());
        }
        let greedy = policy.act(&ChainMdp::observation_for(s)).map_err(|e| e.to_string())?;
        let best = if q_star[s][0] >= q_star[s][1] { 0 } else { 1 };
        ensure(greedy == AgentAction::Discrete(vec![best]), || format!("state {s}: greedy {greedy:?}"))?;
    }
    ensure(worst < 1e-2, || format!("max |Q - Q*| = {worst}"))?;
    Ok(format!("DQN max |Q - Q*| {worst:.1e} in {elapsed:.1?}"))
}

pub fn quadratic_config(algorithm: Algorithm, seed: u64) -> AgentConfig {
    AgentConfig {
        hidden: vec![32, 32],
        actor_lr: 1e-3,
        critic_lr: 1e-3,
        total_steps: 3_000,
        learning_starts: 300,
        batch_size: 64,
        normalize_observations: false,
        seed,
        ..AgentConfig::new(algorithm)
    }
}

pub fn quadratic_action(policy: &Policy) -> f64 {
    match policy.act(&[1.0]).unwrap() {
        AgentAction::Continuous(v) => v[0],
        other => panic!("unexpected action {other:?}"),
    }
}

/// DDPG or TD3 on the quadratic bandit with optimum 0.3.
pub fn actor_critic_quadratic(algorithm: Algorithm) -> Outcome {
    let cfg = quadratic_config(algorithm, 1);
    let mut env = QuadraticBandit::new(0.3);
    let (policy, elapsed) = timed(|| match algorithm {
        Algorithm::Ddpg => train_ddpg(&mut env, &cfg),
        _ => train_td3(&mut env, &cfg),
    })?;
    let a = quadratic_action(&policy.map_err(|e| e.to_string())?);
    ensure((a - 0.3).abs() < 0.05, || format!("{algorithm} action {a}"))?;
    Ok(format!("{algorithm} action {a:.3} in {elapsed:.1?}"))
}

pub fn ppo_bandit() -> Outcome {
    let cfg = AgentConfig {
        hidden: vec![16, 16],
        actor_lr: 3e-3,
        critic_lr: 3e-3,
        total_steps: 5_000,
        rollout_len: 256,
        batch_size: 64,
        seed: 5,
        ..AgentConfig::new(Algorithm::Ppo)
    };
    let mut env = NoisyBandit::two_armed(1, 1.0, 0.0);
    let (policy, elapsed) = timed(|| train_ppo(&mut env, &cfg))?;
    let logits = network_output(&policy.map_err(|e| e.to_string())?, &[1.0]);
    let p = marketgym::agents::heads::softmax(&logits);
    ensure(p[1] > 0.95, || format!("P(better arm) = {}", p[1]))?;
    Ok(format!("PPO P(better arm) {:.3} in {elapsed:.1?}", p[1]))
}

pub fn criterion() -> Outcome {
    let parts = [
        dqn_chain()?,
        actor_critic_quadratic(Algorithm::Ddpg)?,
        actor_critic_quadratic(Algorithm::Td3)?,
        ppo_bandit()?,
    ];
    Ok(parts.join("; "))
}
