//! Small environments with known optimal behavior, used to check that the
//! training loops converge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionSpace, AgentAction, AgentError, Environment, Transition};

fn discrete_choice(action: &AgentAction, choices: usize) -> Result<usize, AgentError> {
    match action {
        AgentAction::Discrete(v) if v.len() == 1 && v[0] < choices => Ok(v[0]),
        other => Err(AgentError::ShapeMismatch(format!("expected one choice below {choices}, got {other:?}"))),
    }
}

fn continuous_scalar(action: &AgentAction) -> Result<f64, AgentError> {
    match action {
        AgentAction::Continuous(v) if v.len() == 1 => Ok(v[0]),
        other => Err(AgentError::ShapeMismatch(format!("expected a 1-D continuous action, got {other:?}"))),
    }
}

/// Two-state deterministic chain with one-hot observations.
///
/// From `s0`, action 0 moves to `s1` with reward 0 and action 1 ends the
/// episode with reward 0.5. From `s1`, action 0 ends with reward 1 and
/// action 1 ends with reward 0. Terminal observations are all zeros.
#[derive(Debug, Clone, Default)]
pub struct ChainMdp {
    state: usize,
}

impl ChainMdp {
    pub const N_STATES: usize = 2;
    pub const N_ACTIONS: usize = 2;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn observation_for(state: usize) -> Vec<f64> {
        let mut obs = vec![0.0; Self::N_STATES];
        if state < Self::N_STATES {
            obs[state] = 1.0;
        }
        obs
    }

    /// `(next_state, reward, done)` for taking `action` in `state`; the next
    /// state is `None` on termination.
    pub fn dynamics(state: usize, action: usize) -> (Option<usize>, f64) {
        match (state, action) {
            (0, 0) => (Some(1), 0.0),
            (0, _) => (None, 0.5),
            (_, 0) => (None, 1.0),
            _ => (None, 0.0),
        }
    }
}

impl Environment for ChainMdp {
    fn observation_len(&self) -> usize {
        Self::N_STATES
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete { branches: 1, choices: Self::N_ACTIONS }
    }

    fn reset(&mut self) -> Vec<f64> {
        self.state = 0;
        Self::observation_for(0)
    }

    fn step(&mut self, action: &AgentAction) -> Result<Transition, AgentError> {
        let a = discrete_choice(action, Self::N_ACTIONS)?;
        let (next, reward) = Self::dynamics(self.state, a);
        self.state = next.unwrap_or(Self::N_STATES);
        Ok(Transition { observation: Self::observation_for(self.state), reward, done: next.is_none() })
    }
}

/// Single-state bandit with discrete arms whose rewards are the arm mean plus
/// uniform noise in `[-noise, noise]`. Every step ends the episode. Observed
/// rewards are recorded per arm.
#[derive(Debug, Clone)]
pub struct NoisyBandit {
    means: Vec<f64>,
    noise: f64,
    rng: ChaCha8Rng,
    history: Vec<Vec<f64>>,
}

impl NoisyBandit {
    pub fn new(means: Vec<f64>, noise: f64, seed: u64) -> Self {
        let history = vec![Vec::new(); means.len()];
        Self { means, noise, rng: ChaCha8Rng::seed_from_u64(seed), history }
    }

    /// A deterministic two-armed bandit paying `good` and `bad`.
    pub fn two_armed(good_arm: usize, good: f64, bad: f64) -> Self {
        let mut means = vec![bad, bad];
        means[good_arm] = good;
        Self::new(means, 0.0, 0)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Rewards observed on each arm so far.
    pub fn history(&self) -> &[Vec<f64>] {
        &self.history
    }
}

impl Environment for NoisyBandit {
    fn observation_len(&self) -> usize {
        1
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete { branches: 1, choices: self.means.len() }
    }

    fn reset(&mut self) -> Vec<f64> {
        vec![1.0]
    }

    fn step(&mut self, action: &AgentAction) -> Result<Transition, AgentError> {
        let a = discrete_choice(action, self.means.len())?;
        let noise = if self.noise > 0.0 { self.rng.random_range(-self.noise..=self.noise) } else { 0.0 };
        let reward = self.means[a] + noise;
        self.history[a].push(reward);
        Ok(Transition { observation: vec![1.0], reward, done: true })
    }
}

/// One-step continuous bandit with reward `-(a - optimum)^2`.
#[derive(Debug, Clone)]
pub struct QuadraticBandit {
    optimum: f64,
}

impl QuadraticBandit {
    pub fn new(optimum: f64) -> Self {
        Self { optimum }
    }

    pub fn optimum(&self) -> f64 {
        self.optimum
    }
}

impl Environment for QuadraticBandit {
    fn observation_len(&self) -> usize {
        1
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous { dim: 1 }
    }

    fn reset(&mut self) -> Vec<f64> {
        vec![1.0]
    }

    fn step(&mut self, action: &AgentAction) -> Result<Transition, AgentError> {
        let a = continuous_scalar(action)?;
        Ok(Transition { observation: vec![1.0], reward: -(a - self.optimum).powi(2), done: true })
    }
}
