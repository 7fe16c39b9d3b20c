use serde::{Deserialize, Serialize};

use super::{Activation, AgentError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dqn,
    Ddpg,
    Td3,
    Ppo,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Dqn => "DQN",
            Algorithm::Ddpg => "DDPG",
            Algorithm::Td3 => "TD3",
            Algorithm::Ppo => "PPO",
        })
    }
}

/// Hyperparameters shared by all four algorithms. Fields irrelevant to the
/// chosen algorithm are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub algorithm: Algorithm,
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_size: usize,
    pub total_steps: usize,
    /// Uniformly random actions before off-policy learning starts.
    pub learning_starts: usize,
    pub normalize_observations: bool,
    pub seed: u64,

    /// DQN epsilon schedule: linear from start to end over this fraction of
    /// `total_steps`.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_fraction: f64,
    /// DQN hard target copy every N updates; `None` uses Polyak with `tau`.
    pub target_update_interval: Option<usize>,

    /// DDPG/TD3 Gaussian exploration noise on the actor output.
    pub exploration_noise: f64,
    /// TD3 policy delay.
    pub policy_delay: usize,
    /// TD3 target smoothing noise and its clip.
    pub target_noise: f64,
    pub noise_clip: f64,

    pub clip_ratio: f64,
    pub epochs: usize,
    pub gae_lambda: f64,
    /// Environment steps per PPO rollout.
    pub rollout_len: usize,
    pub entropy_coef: f64,
    pub initial_log_std: f64,

    /// Steps between training checkpoints offered to observers.
    pub checkpoint_interval: Option<usize>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Ppo,
            hidden: vec![64, 64],
            hidden_activation: Activation::Relu,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 64,
            buffer_size: 100_000,
            total_steps: 100_000,
            learning_starts: 1_000,
            normalize_observations: true,
            seed: 0,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_fraction: 0.1,
            target_update_interval: None,
            exploration_noise: 0.1,
            policy_delay: 2,
            target_noise: 0.2,
            noise_clip: 0.5,
            clip_ratio: 0.2,
            epochs: 10,
            gae_lambda: 0.95,
            rollout_len: 2048,
            entropy_coef: 0.0,
            initial_log_std: 0.0,
            checkpoint_interval: None,
        }
    }
}

impl AgentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |msg: String| Err(AgentError::InvalidConfig(msg));
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must be in [0, 1), got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau must be in (0, 1], got {}", self.tau));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be > 0".into());
        }
        if !(self.clip_ratio > 0.0) {
            return bad("clip ratio must be > 0".into());
        }
        if self.batch_size == 0 || self.buffer_size < self.batch_size {
            return bad("batch size must be positive and fit in the buffer".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive".into());
        }
        if self.epochs == 0 || self.rollout_len == 0 || self.policy_delay == 0 {
            return bad("epochs, rollout length and policy delay must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("GAE lambda must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_end) || !(0.0..=1.0).contains(&self.epsilon_start) {
            return bad("epsilon values must be in [0, 1]".into());
        }
        if self.exploration_noise < 0.0 || self.target_noise < 0.0 || self.noise_clip < 0.0 {
            return bad("noise scales must be >= 0".into());
        }
        if self.checkpoint_interval == Some(0) || self.target_update_interval == Some(0) {
            return bad("intervals must be >= 1".into());
        }
        Ok(())
    }

    pub(crate) fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(output);
        sizes
    }

    /// DQN exploration rate at `step`.
    pub fn epsilon_at(&self, step: usize) -> f64 {
        let horizon = (self.epsilon_fraction * self.total_steps as f64).max(1.0);
        if step as f64 >= horizon {
            return self.epsilon_end;
        }
        let frac = step as f64 / horizon;
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }
}
