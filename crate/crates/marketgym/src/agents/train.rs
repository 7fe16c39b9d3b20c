//! Training-loop plumbing shared by the algorithms: progress records,
//! observers and the CSV training log.

use std::io::Write;

use super::{AgentError, Policy};

/// Mean loss terms over the updates of one episode. DQN reports its TD loss as
/// `critic`; PPO reports value loss as `critic` and policy loss as `actor`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub critic: Option<f64>,
    pub actor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub global_step: usize,
    pub episode: usize,
    pub episodic_return: f64,
    pub losses: LossTerms,
}

/// Hooks invoked by the training loops.
pub trait TrainObserver {
    fn on_episode(&mut self, _record: &EpisodeRecord) -> Result<(), AgentError> {
        Ok(())
    }

    /// Called every `checkpoint_interval` steps and once at the end of
    /// training with the current evaluation policy.
    fn on_checkpoint(&mut self, _global_step: usize, _policy: &Policy) -> Result<(), AgentError> {
        Ok(())
    }
}

pub struct NoopObserver;

impl TrainObserver for NoopObserver {}

/// Collects episode records in memory.
#[derive(Debug, Clone, Default)]
pub struct TrainingLog {
    pub records: Vec<EpisodeRecord>,
}

impl TrainObserver for TrainingLog {
    fn on_episode(&mut self, record: &EpisodeRecord) -> Result<(), AgentError> {
        self.records.push(*record);
        Ok(())
    }
}

pub const TRAINING_LOG_HEADER: &str = "global_step,episode,episodic_return,critic_loss,actor_loss";

/// One CSV line (no trailing newline) for `record`.
pub fn training_log_line(record: &EpisodeRecord) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{}",
        record.global_step,
        record.episode,
        record.episodic_return,
        opt(record.losses.critic),
        opt(record.losses.actor)
    )
}

impl TrainingLog {
    pub fn write_csv<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "{TRAINING_LOG_HEADER}")?;
        for r in &self.records {
            writeln!(writer, "{}", training_log_line(r))?;
        }
        Ok(())
    }
}

/// Running sums for the loss terms and return of the current episode.
#[derive(Debug, Default)]
pub(crate) struct EpisodeTracker {
    episode: usize,
    episodic_return: f64,
    critic: (f64, usize),
    actor: (f64, usize),
}

impl EpisodeTracker {
    pub fn add_reward(&mut self, r: f64) {
        self.episodic_return += r;
    }

    pub fn add_critic(&mut self, loss: f64, step: usize) -> Result<(), AgentError> {
        check_finite(loss, step)?;
        self.critic.0 += loss;
        self.critic.1 += 1;
        Ok(())
    }

    pub fn add_actor(&mut self, loss: f64, step: usize) -> Result<(), AgentError> {
        check_finite(loss, step)?;
        self.actor.0 += loss;
        self.actor.1 += 1;
        Ok(())
    }

    /// Closes the episode and returns its record.
    pub fn finish(&mut self, global_step: usize) -> EpisodeRecord {
        let mean = |(sum, n): (f64, usize)| (n > 0).then(|| sum / n as f64);
        let record = EpisodeRecord {
            global_step,
            episode: self.episode,
            episodic_return: self.episodic_return,
            losses: LossTerms { critic: mean(self.critic), actor: mean(self.actor) },
        };
        *self = EpisodeTracker { episode: self.episode + 1, ..EpisodeTracker::default() };
        record
    }
}

pub(crate) fn check_finite(loss: f64, step: usize) -> Result<(), AgentError> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(AgentError::Divergence { step })
    }
}

pub(crate) fn is_checkpoint(step: usize, interval: Option<usize>) -> bool {
    matches!(interval, Some(k) if step > 0 && step % k == 0)
}
