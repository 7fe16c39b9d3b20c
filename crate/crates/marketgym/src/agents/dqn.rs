//! Deep Q-network with experience replay and a target network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heads::argmax;
use super::replay::{Experience, ReplayBuffer};
use super::train::{is_checkpoint, EpisodeTracker, NoopObserver, TrainObserver};
use super::{
    gradcheck, ActionSpace, Activation, Adam, AgentAction, AgentConfig, AgentError, Algorithm, Environment, Mlp,
    ObservationFilter, Policy, PolicyHead,
};

/// Online and target Q-networks plus their optimizer.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    q: Mlp,
    target: Mlp,
    optimizer: Adam,
    gamma: f64,
    tau: f64,
    hard_interval: Option<usize>,
    updates: usize,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(obs_len: usize, n_actions: usize, config: &AgentConfig, rng: &mut R) -> Self {
        let q = Mlp::new(
            &config.layer_sizes(obs_len, n_actions),
            config.hidden_activation,
            Activation::Identity,
            rng,
        );
        Self {
            target: q.clone(),
            optimizer: Adam::new(q.param_count(), config.critic_lr),
            q,
            gamma: config.gamma,
            tau: config.tau,
            hard_interval: config.target_update_interval,
            updates: 0,
        }
    }

    pub fn q_network(&self) -> &Mlp {
        &self.q
    }

    pub fn target_network(&self) -> &Mlp {
        &self.target
    }

    /// One gradient step on the mean squared TD error
    /// `(Q(s, a) - (r + gamma * (1 - done) * max_a' Q_target(s', a')))^2`.
    /// Returns the loss before the step.
    pub fn update(&mut self, batch: &[&Experience], filter: &ObservationFilter) -> Result<f64, AgentError> {
        let scale = 1.0 / batch.len() as f64;
        let mut grads = vec![0.0; self.q.param_count()];
        let mut loss = 0.0;
        for e in batch {
            let next_q = self.target.forward(&filter.apply(&e.next_observation))?;
            let bootstrap = if e.done { 0.0 } else { next_q.iter().copied().fold(f64::NEG_INFINITY, f64::max) };
            let target = e.reward + self.gamma * bootstrap;
            let tape = self.q.forward_tape(&filter.apply(&e.observation))?;
            let a = e.action[0] as usize;
            let err = tape.output()[a] - target;
            loss += err * err * scale;
            let mut upstream = vec![0.0; self.q.output_len()];
            upstream[a] = 2.0 * err * scale;
            self.q.backward(&tape, &upstream, &mut grads)?;
        }
        self.optimizer.step(self.q.params_mut(), &grads);
        self.updates += 1;
        match self.hard_interval {
            Some(k) if self.updates % k == 0 => self.target = self.q.clone(),
            Some(_) => {}
            None => self.target.soft_update_from(&self.q, self.tau),
        }
        Ok(loss)
    }

    pub fn greedy(&self, input: &[f64]) -> Result<usize, AgentError> {
        Ok(argmax(&self.q.forward(input)?))
    }
}

pub fn train_dqn<E: Environment + ?Sized>(env: &mut E, config: &AgentConfig) -> Result<Policy, AgentError> {
    train_dqn_with(env, config, &mut NoopObserver)
}

pub fn train_dqn_with<E: Environment + ?Sized>(
    env: &mut E,
    config: &AgentConfig,
    observer: &mut dyn TrainObserver,
) -> Result<Policy, AgentError> {
    config.validate()?;
    let space = env.action_space();
    let n_actions = match space {
        ActionSpace::Discrete { branches: 1, choices } => choices,
        other => {
            return Err(AgentError::IncompatibleActionSpace(format!(
                "DQN needs a single discrete action branch, got {other:?}"
            )))
        }
    };
    gradcheck::self_test(config.hidden_activation, &[gradcheck::HeadKind::QValue])?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let obs_len = env.observation_len();
    let mut agent = DqnAgent::new(obs_len, n_actions, config, &mut rng);
    let mut filter = ObservationFilter::new(obs_len, config.normalize_observations);
    let mut buffer = ReplayBuffer::new(config.buffer_size);
    let mut tracker = EpisodeTracker::default();
    let snapshot = |agent: &DqnAgent, filter: &ObservationFilter| {
        Policy::new(Algorithm::Dqn, space, PolicyHead::Greedy, agent.q.clone(), filter.snapshot())
    };

    let mut obs = env.reset();
    filter.observe(&obs);
    for step in 0..config.total_steps {
        let explore = step < config.learning_starts || rng.random::<f64>() < config.epsilon_at(step);
        let choice = if explore { rng.random_range(0..n_actions) } else { agent.greedy(&filter.apply(&obs))? };
        let tr = env.step(&AgentAction::Discrete(vec![choice]))?;
        filter.observe(&tr.observation);
        tracker.add_reward(tr.reward);
        buffer.push(Experience {
            observation: obs,
            action: vec![choice as f64],
            reward: tr.reward,
            next_observation: tr.observation.clone(),
            done: tr.done,
        });
        obs = if tr.done {
            observer.on_episode(&tracker.finish(step + 1))?;
            let first = env.reset();
            filter.observe(&first);
            first
        } else {
            tr.observation
        };
        if step >= config.learning_starts {
            if let Some(batch) = buffer.sample(config.batch_size, &mut rng) {
                let loss = agent.update(&batch, &filter)?;
                tracker.add_critic(loss, step + 1)?;
            }
        }
        if is_checkpoint(step + 1, config.checkpoint_interval) {
            observer.on_checkpoint(step + 1, &snapshot(&agent, &filter))?;
        }
    }
    let policy = snapshot(&agent, &filter);
    if !is_checkpoint(config.total_steps, config.checkpoint_interval) {
        observer.on_checkpoint(config.total_steps, &policy)?;
    }
    Ok(policy)
}
