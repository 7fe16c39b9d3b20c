//! From-scratch deep RL: networks with analytic gradients, replay, and the
//! DQN, DDPG, TD3 and PPO training loops.
//!
//! Every algorithm trains against the [`Environment`] trait, which
//! [`TradingEnv`](crate::env::TradingEnv) implements. Small fixture
//! environments for convergence checks live in [`toy`].

mod adam;
mod config;
mod ddpg;
mod dqn;
mod environment;
pub mod gradcheck;
pub mod heads;
mod mlp;
mod normalizer;
mod policy;
mod ppo;
mod replay;
pub mod toy;
mod train;

pub use adam::Adam;
pub use config::{AgentConfig, Algorithm};
pub use ddpg::{train_ddpg, train_ddpg_with, train_td3, train_td3_with, ActorCriticAgent, CriticUpdate};
pub use dqn::{train_dqn, train_dqn_with, DqnAgent};
pub use environment::{to_env_action, ActionSpace, AgentAction, Environment, Transition};
pub use mlp::{param_count, Activation, Mlp, Tape};
pub use normalizer::{ObservationFilter, RunningNormalizer};
pub use policy::{Policy, PolicyHead, POLICY_FORMAT, POLICY_VERSION};
pub use ppo::{compute_gae, train_ppo, train_ppo_with, PpoAgent, PpoHead, RolloutSample, SurrogateGradient};
pub use replay::{Experience, ReplayBuffer};
pub use train::{
    training_log_line, EpisodeRecord, LossTerms, NoopObserver, TrainObserver, TrainingLog, TRAINING_LOG_HEADER,
};

use thiserror::Error;

use crate::env::EnvError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid agent config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("incompatible action space: {0}")]
    IncompatibleActionSpace(String),
    #[error("training diverged at step {step}: loss is not finite")]
    Divergence { step: usize },
    #[error("policy serialization: {0}")]
    Serialization(String),
    #[error("gradient self-test failed for the {head} head: relative error {error:e}")]
    GradientCheck { head: String, error: f64 },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Concatenates an observation and an action into a critic input.
pub(crate) fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}
