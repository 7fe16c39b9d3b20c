//! The contract agents train against, and its implementation for
//! [`TradingEnv`].

use super::AgentError;
use crate::env::{ActionSpec, EnvAction, TradingEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionSpace {
    /// `branches` independent categorical choices of `choices` options each.
    Discrete { branches: usize, choices: usize },
    /// Real vector, nominally in `[-1, 1]^dim`.
    Continuous { dim: usize },
}

impl ActionSpace {
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete { branches, .. } => *branches,
            ActionSpace::Continuous { dim } => *dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentAction {
    Discrete(Vec<usize>),
    Continuous(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Episodic environment with a fixed observation length.
pub trait Environment {
    fn observation_len(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: &AgentAction) -> Result<Transition, AgentError>;
}

impl Environment for TradingEnv {
    fn observation_len(&self) -> usize {
        TradingEnv::observation_len(self)
    }

    fn action_space(&self) -> ActionSpace {
        match self.config().action {
            ActionSpec::DiscreteShares { max_shares } => ActionSpace::Discrete {
                branches: self.n_assets(),
                choices: 2 * max_shares as usize + 1,
            },
            ActionSpec::ContinuousShares { .. } | ActionSpec::SimplexWeights => {
                ActionSpace::Continuous { dim: self.n_assets() }
            }
        }
    }

    fn reset(&mut self) -> Vec<f64> {
        TradingEnv::reset(self)
    }

    fn step(&mut self, action: &AgentAction) -> Result<Transition, AgentError> {
        let env_action = to_env_action(self.config().action, action)?;
        let out = TradingEnv::step(self, &env_action)?;
        Ok(Transition { observation: out.observation, reward: out.reward, done: out.done })
    }
}

/// Maps an agent action onto the trading environment's action encoding:
/// discrete choice `c` is `c - k` shares.
pub fn to_env_action(spec: ActionSpec, action: &AgentAction) -> Result<EnvAction, AgentError> {
    match (spec, action) {
        (ActionSpec::DiscreteShares { max_shares }, AgentAction::Discrete(choices)) => Ok(EnvAction::Shares(
            choices.iter().map(|c| *c as i64 - max_shares as i64).collect(),
        )),
        (ActionSpec::ContinuousShares { .. } | ActionSpec::SimplexWeights, AgentAction::Continuous(raw)) => {
            Ok(EnvAction::Raw(raw.clone()))
        }
        _ => Err(AgentError::IncompatibleActionSpace("action kind does not match the environment".into())),
    }
}
