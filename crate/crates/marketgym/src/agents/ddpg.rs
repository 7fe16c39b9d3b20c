//! Deterministic actor-critic methods: DDPG and its twin-critic refinement
//! TD3. Both share one agent type; DDPG is the configuration with a single
//! critic, no target smoothing and an actor update after every critic update.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::replay::{Experience, ReplayBuffer};
use super::train::{is_checkpoint, EpisodeTracker, NoopObserver, TrainObserver};
use super::{
    concat, gradcheck, ActionSpace, Activation, Adam, AgentAction, AgentConfig, AgentError, Algorithm, Environment,
    Mlp, ObservationFilter, Policy, PolicyHead,
};

/// Initial scale of the actor's output layer, so early actions sit near the
/// center of `[-1, 1]` instead of saturating the tanh.
const ACTOR_OUTPUT_SCALE: f64 = 0.1;

/// Losses from one call to [`ActorCriticAgent::update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticUpdate {
    /// Mean squared TD error of the first critic, before the step.
    pub critic_loss: f64,
    /// `-mean Q(s, mu(s))` when the actor was updated on this call.
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ActorCriticAgent {
    algorithm: Algorithm,
    actor: Mlp,
    actor_target: Mlp,
    critics: Vec<Mlp>,
    critic_targets: Vec<Mlp>,
    actor_opt: Adam,
    critic_opts: Vec<Adam>,
    gamma: f64,
    tau: f64,
    policy_delay: usize,
    target_noise: f64,
    noise_clip: f64,
    critic_updates: usize,
}

impl ActorCriticAgent {
    /// Builds a DDPG (one critic) or TD3 (two critics) agent. Networks are
    /// drawn from `rng` in the order actor, first critic, second critic, so a
    /// DDPG and a TD3 agent built from equal seeds share the actor and first
    /// critic.
    pub fn new<R: Rng + ?Sized>(
        algorithm: Algorithm,
        obs_len: usize,
        act_dim: usize,
        config: &AgentConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        let twin = match algorithm {
            Algorithm::Ddpg => false,
            Algorithm::Td3 => true,
            other => return Err(AgentError::InvalidConfig(format!("{other} is not an actor-critic algorithm"))),
        };
        let mut actor =
            Mlp::new(&config.layer_sizes(obs_len, act_dim), config.hidden_activation, Activation::Tanh, rng);
        actor.scale_output_layer(ACTOR_OUTPUT_SCALE);
        let critic_sizes = config.layer_sizes(obs_len + act_dim, 1);
        let n_critics = if twin { 2 } else { 1 };
        let critics: Vec<Mlp> = (0..n_critics)
            .map(|_| Mlp::new(&critic_sizes, config.hidden_activation, Activation::Identity, rng))
            .collect();
        Ok(Self {
            algorithm,
            actor_target: actor.clone(),
            actor_opt: Adam::new(actor.param_count(), config.actor_lr),
            actor,
            critic_targets: critics.clone(),
            critic_opts: critics.iter().map(|c| Adam::new(c.param_count(), config.critic_lr)).collect(),
            critics,
            gamma: config.gamma,
            tau: config.tau,
            policy_delay: if twin { config.policy_delay } else { 1 },
            target_noise: if twin { config.target_noise } else { 0.0 },
            noise_clip: config.noise_clip,
            critic_updates: 0,
        })
    }

    /// Makes every critic (and its target) a copy of the first one.
    pub fn tie_critics(&mut self) {
        for i in 1..self.critics.len() {
            self.critics[i] = self.critics[0].clone();
            self.critic_targets[i] = self.critic_targets[0].clone();
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn actor_target(&self) -> &Mlp {
        &self.actor_target
    }

    pub fn critics(&self) -> &[Mlp] {
        &self.critics
    }

    pub fn critic_targets(&self) -> &[Mlp] {
        &self.critic_targets
    }

    /// Noiseless actor output for an already-normalized input.
    pub fn act(&self, input: &[f64]) -> Result<Vec<f64>, AgentError> {
        self.actor.forward(input)
    }

    fn target_action<R: Rng + ?Sized>(&self, next: &[f64], rng: &mut R) -> Result<Vec<f64>, AgentError> {
        let mut a = self.actor_target.forward(next)?;
        if self.target_noise > 0.0 {
            for x in &mut a {
                let eps: f64 = rng.sample::<f64, _>(StandardNormal) * self.target_noise;
                *x = (*x + eps.clamp(-self.noise_clip, self.noise_clip)).clamp(-1.0, 1.0);
            }
        }
        Ok(a)
    }

    /// One critic step for every critic, then (every `policy_delay` critic
    /// steps) one actor step followed by Polyak updates of all targets.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        batch: &[&Experience],
        filter: &ObservationFilter,
        rng: &mut R,
    ) -> Result<CriticUpdate, AgentError> {
        let scale = 1.0 / batch.len() as f64;
        let inputs: Vec<Vec<f64>> = batch.iter().map(|e| filter.apply(&e.observation)).collect();

        let mut targets = Vec::with_capacity(batch.len());
        for e in batch {
            let next = filter.apply(&e.next_observation);
            let next_action = self.target_action(&next, rng)?;
            let critic_in = concat(&next, &next_action);
            let estimates = self
                .critic_targets
                .iter()
                .map(|c| Ok(c.forward(&critic_in)?[0]))
                .collect::<Result<Vec<f64>, AgentError>>()?;
            let min = estimates.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(estimates.iter().all(|q| min <= *q), "min target exceeds a critic target");
            targets.push(e.reward + if e.done { 0.0 } else { self.gamma * min });
        }

        let mut critic_loss = 0.0;
        for (i, critic) in self.critics.iter_mut().enumerate() {
            let mut grads = vec![0.0; critic.param_count()];
            let mut loss = 0.0;
            for ((e, input), y) in batch.iter().zip(&inputs).zip(&targets) {
                let tape = critic.forward_tape(&concat(input, &e.action))?;
                let err = tape.output()[0] - y;
                loss += err * err * scale;
                critic.backward(&tape, &[2.0 * err * scale], &mut grads)?;
            }
            self.critic_opts[i].step(critic.params_mut(), &grads);
            if i == 0 {
                critic_loss = loss;
            }
        }
        self.critic_updates += 1;

        let mut actor_loss = None;
        if self.critic_updates % self.policy_delay == 0 {
            let critic = &self.critics[0];
            let obs_len = critic.input_len() - self.actor.output_len();
            let mut grads = vec![0.0; self.actor.param_count()];
            let mut scratch = vec![0.0; critic.param_count()];
            let mut loss = 0.0;
            for input in &inputs {
                let actor_tape = self.actor.forward_tape(input)?;
                let critic_tape = critic.forward_tape(&concat(input, actor_tape.output()))?;
                loss -= critic_tape.output()[0] * scale;
                let d_input = critic.backward(&critic_tape, &[-scale], &mut scratch)?;
                self.actor.backward(&actor_tape, &d_input[obs_len..], &mut grads)?;
            }
            self.actor_opt.step(self.actor.params_mut(), &grads);
            actor_loss = Some(loss);

            self.actor_target.soft_update_from(&self.actor, self.tau);
            for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
                t.soft_update_from(c, self.tau);
            }
        }
        Ok(CriticUpdate { critic_loss, actor_loss })
    }
}

pub fn train_ddpg<E: Environment + ?Sized>(env: &mut E, config: &AgentConfig) -> Result<Policy, AgentError> {
    train_actor_critic(Algorithm::Ddpg, env, config, &mut NoopObserver)
}

pub fn train_ddpg_with<E: Environment + ?Sized>(
    env: &mut E,
    config: &AgentConfig,
    observer: &mut dyn TrainObserver,
) -> Result<Policy, AgentError> {
    train_actor_critic(Algorithm::Ddpg, env, config, observer)
}

pub fn train_td3<E: Environment + ?Sized>(env: &mut E, config: &AgentConfig) -> Result<Policy, AgentError> {
    train_actor_critic(Algorithm::Td3, env, config, &mut NoopObserver)
}

pub fn train_td3_with<E: Environment + ?Sized>(
    env: &mut E,
    config: &AgentConfig,
    observer: &mut dyn TrainObserver,
) -> Result<Policy, AgentError> {
    train_actor_critic(Algorithm::Td3, env, config, observer)
}

fn train_actor_critic<E: Environment + ?Sized>(
    algorithm: Algorithm,
    env: &mut E,
    config: &AgentConfig,
    observer: &mut dyn TrainObserver,
) -> Result<Policy, AgentError> {
    config.validate()?;
    let space = env.action_space();
    let act_dim = match space {
        ActionSpace::Continuous { dim } => dim,
        other => {
            return Err(AgentError::IncompatibleActionSpace(format!(
                "{algorithm} needs a continuous action space, got {other:?}"
            )))
        }
    };
    gradcheck::self_test(
        config.hidden_activation,
        &[gradcheck::HeadKind::QValue, gradcheck::HeadKind::DeterministicActor],
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let obs_len = env.observation_len();
    let mut agent = ActorCriticAgent::new(algorithm, obs_len, act_dim, config, &mut rng)?;
    let mut filter = ObservationFilter::new(obs_len, config.normalize_observations);
    let mut buffer = ReplayBuffer::new(config.buffer_size);
    let mut tracker = EpisodeTracker::default();
    let snapshot = |agent: &ActorCriticAgent, filter: &ObservationFilter| {
        Policy::new(algorithm, space, PolicyHead::Deterministic, agent.actor.clone(), filter.snapshot())
    };

    let mut obs = env.reset();
    filter.observe(&obs);
    for step in 0..config.total_steps {
        let action: Vec<f64> = if step < config.learning_starts {
            (0..act_dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
        } else {
            let mean = agent.act(&filter.apply(&obs))?;
            mean.iter()
                .map(|m| (m + config.exploration_noise * rng.sample::<f64, _>(StandardNormal)).clamp(-1.0, 1.0))
                .collect()
        };
        let tr = env.step(&AgentAction::Continuous(action.clone()))?;
        filter.observe(&tr.observation);
        tracker.add_reward(tr.reward);
        buffer.push(Experience {
            observation: obs,
            action,
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
                let update = agent.update(&batch, &filter, &mut rng)?;
                tracker.add_critic(update.critic_loss, step + 1)?;
                if let Some(actor_loss) = update.actor_loss {
                    tracker.add_actor(actor_loss, step + 1)?;
                }
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

#[cfg(test)]
mod tests {
    use super::*;

    fn batch_fixture() -> Vec<Experience> {
        (0..8)
            .map(|i| {
                let x = i as f64 / 8.0;
                Experience {
                    observation: vec![x, 1.0 - x],
                    action: vec![x - 0.5],
                    reward: -(x - 0.3).powi(2),
                    next_observation: vec![1.0 - x, x],
                    done: i % 3 == 0,
                }
            })
            .collect()
    }

    fn small_config() -> AgentConfig {
        AgentConfig { hidden: vec![8, 8], batch_size: 8, ..AgentConfig::default() }
    }

    #[test]
    fn tau_one_copies_online_into_target() {
        let cfg = AgentConfig { tau: 1.0, ..small_config() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut agent = ActorCriticAgent::new(Algorithm::Ddpg, 2, 1, &cfg, &mut rng).unwrap();
        let data = batch_fixture();
        let batch: Vec<&Experience> = data.iter().collect();
        let filter = ObservationFilter::new(2, false);
        for _ in 0..3 {
            agent.update(&batch, &filter, &mut rng).unwrap();
            assert_eq!(agent.actor().params(), agent.actor_target().params());
            assert_eq!(agent.critics()[0].params(), agent.critic_targets()[0].params());
        }
    }

    #[test]
    fn td3_degenerates_to_ddpg() {
        let cfg = AgentConfig { policy_delay: 1, target_noise: 0.0, ..small_config() };
        let mut ddpg = ActorCriticAgent::new(Algorithm::Ddpg, 2, 1, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut td3 = ActorCriticAgent::new(Algorithm::Td3, 2, 1, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        td3.tie_critics();
        let data = batch_fixture();
        let batch: Vec<&Experience> = data.iter().collect();
        let filter = ObservationFilter::new(2, false);
        let a = ddpg.update(&batch, &filter, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let b = td3.update(&batch, &filter, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ddpg.actor().params(), td3.actor().params());
        assert_eq!(ddpg.critics()[0].params(), td3.critics()[0].params());
        assert_eq!(td3.critics()[0].params(), td3.critics()[1].params());
    }

    #[test]
    fn td3_delays_actor_updates() {
        let cfg = AgentConfig { policy_delay: 2, ..small_config() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut agent = ActorCriticAgent::new(Algorithm::Td3, 2, 1, &cfg, &mut rng).unwrap();
        let data = batch_fixture();
        let batch: Vec<&Experience> = data.iter().collect();
        let filter = ObservationFilter::new(2, false);
        let before = agent.actor().params().to_vec();
        assert!(agent.update(&batch, &filter, &mut rng).unwrap().actor_loss.is_none());
        assert_eq!(agent.actor().params(), &before[..]);
        assert!(agent.update(&batch, &filter, &mut rng).unwrap().actor_loss.is_some());
        assert_ne!(agent.actor().params(), &before[..]);
    }
}
