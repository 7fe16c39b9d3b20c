//! Trained policies: evaluation-mode action selection and JSON persistence.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::heads::{argmax, categorical_argmax};
use super::{ActionSpace, AgentAction, AgentError, Algorithm, Mlp, RunningNormalizer};

pub const POLICY_FORMAT: &str = "marketgym-policy";
pub const POLICY_VERSION: u32 = 1;

/// How network outputs become actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyHead {
    /// Argmax over Q-values (single branch).
    Greedy,
    /// Tanh actor output used as-is.
    Deterministic,
    /// Per-branch argmax of logits.
    Categorical { branches: usize },
    /// Mean of a diagonal Gaussian, clamped to `[-1, 1]`.
    Gaussian { log_std: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    format: String,
    version: u32,
    algorithm: Algorithm,
    action_space: ActionSpace,
    head: PolicyHead,
    network: Mlp,
    normalizer: Option<RunningNormalizer>,
    deterministic: bool,
}

impl Policy {
    pub fn new(
        algorithm: Algorithm,
        action_space: ActionSpace,
        head: PolicyHead,
        network: Mlp,
        normalizer: Option<RunningNormalizer>,
    ) -> Self {
        Self {
            format: POLICY_FORMAT.into(),
            version: POLICY_VERSION,
            algorithm,
            action_space,
            head,
            network,
            normalizer,
            deterministic: true,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn action_space(&self) -> ActionSpace {
        self.action_space
    }

    pub fn head(&self) -> &PolicyHead {
        &self.head
    }

    pub fn network(&self) -> &Mlp {
        &self.network
    }

    pub fn normalizer(&self) -> Option<&RunningNormalizer> {
        self.normalizer.as_ref()
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn observation_len(&self) -> usize {
        self.network.input_len()
    }

    /// Evaluation-mode action: greedy, noiseless, or the distribution mode.
    pub fn act(&self, observation: &[f64]) -> Result<AgentAction, AgentError> {
        if observation.len() != self.observation_len() {
            return Err(AgentError::ShapeMismatch(format!(
                "policy expects observations of length {}, got {}",
                self.observation_len(),
                observation.len()
            )));
        }
        let input = match &self.normalizer {
            Some(norm) => norm.normalize(observation),
            None => observation.to_vec(),
        };
        let out = self.network.forward(&input)?;
        Ok(match &self.head {
            PolicyHead::Greedy => AgentAction::Discrete(vec![argmax(&out)]),
            PolicyHead::Categorical { branches } => AgentAction::Discrete(categorical_argmax(&out, *branches)),
            PolicyHead::Deterministic => AgentAction::Continuous(out),
            PolicyHead::Gaussian { .. } => AgentAction::Continuous(out.iter().map(|m| m.clamp(-1.0, 1.0)).collect()),
        })
    }

    pub fn to_json(&self) -> Result<String, AgentError> {
        serde_json::to_string_pretty(self).map_err(|e| AgentError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, AgentError> {
        let policy: Policy = serde_json::from_str(text).map_err(|e| AgentError::Serialization(e.to_string()))?;
        policy.check()?;
        Ok(policy)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<(), AgentError> {
        writer.write_all(self.to_json()?.as_bytes())?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn read<R: Read>(mut reader: R) -> Result<Self, AgentError> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AgentError> {
        let file = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AgentError> {
        Self::read(std::fs::File::open(path)?)
    }

    fn check(&self) -> Result<(), AgentError> {
        if self.format != POLICY_FORMAT || self.version != POLICY_VERSION {
            return Err(AgentError::Serialization(format!(
                "unsupported policy file {} v{}",
                self.format, self.version
            )));
        }
        // Re-validate the network through the checked constructor.
        Mlp::from_params(
            self.network.layer_sizes().to_vec(),
            self.network.hidden_activation(),
            self.network.output_activation(),
            self.network.params().to_vec(),
        )?;
        if let Some(norm) = &self.normalizer {
            if norm.dim() != self.network.input_len() {
                return Err(AgentError::Serialization("normalizer width differs from network input".into()));
            }
        }
        let out = self.network.output_len();
        let consistent = match (&self.head, self.action_space) {
            (PolicyHead::Greedy, ActionSpace::Discrete { branches: 1, choices }) => out == choices,
            (PolicyHead::Categorical { branches }, ActionSpace::Discrete { branches: b, choices }) => {
                *branches == b && out == b * choices
            }
            (PolicyHead::Deterministic, ActionSpace::Continuous { dim }) => out == dim,
            (PolicyHead::Gaussian { log_std }, ActionSpace::Continuous { dim }) => out == dim && log_std.len() == dim,
            _ => false,
        };
        if !consistent {
            return Err(AgentError::Serialization("policy head does not match its action space".into()));
        }
        Ok(())
    }
}
