//! Proximal policy optimization with a clipped surrogate objective and
//! GAE(λ) advantages.
//!
//! Discrete action spaces use a factorized categorical head (one softmax per
//! branch); continuous spaces use a diagonal Gaussian whose log standard
//! deviation is a free, state-independent parameter vector.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::heads::{
    categorical_entropy, categorical_entropy_grad, categorical_log_prob, categorical_log_prob_grad, gaussian_log_prob,
    gaussian_log_prob_grad, softmax,
};
use super::train::{is_checkpoint, EpisodeTracker, NoopObserver, TrainObserver};
use super::{
    gradcheck, ActionSpace, Activation, Adam, AgentAction, AgentConfig, AgentError, Algorithm, Environment, Mlp,
    ObservationFilter, Policy, PolicyHead,
};

const POLICY_OUTPUT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpoHead {
    Categorical { branches: usize, choices: usize },
    Gaussian { dim: usize },
}

/// One collected transition, ready for the surrogate loss. `observation` is
/// the network input (already normalized); `action` holds category indices
/// or the unclipped Gaussian sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSample {
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

/// Gradient of the clipped surrogate loss
/// `-mean(min(r A, clip(r, 1 - eps, 1 + eps) A)) - c * mean(entropy)`,
/// with `r = exp(log_prob_new - log_prob_old)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateGradient {
    pub loss: f64,
    pub policy_grads: Vec<f64>,
    /// Empty for categorical heads.
    pub log_std_grads: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Fraction of samples whose gradient was zeroed by clipping.
    pub clipped_fraction: f64,
}

/// Generalized advantage estimates and the matching value targets.
/// `values[t]` estimates the state at `t`; `last_value` estimates the state
/// after the final transition and is ignored if that transition ended an
/// episode.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut next_advantage = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { last_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * live * next_value - values[t];
        next_advantage = delta + gamma * lambda * live * next_advantage;
        advantages[t] = next_advantage;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

fn normalize_in_place(values: &mut [f64]) {
    if values.len() < 2 {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for v in values {
        *v = (*v - mean) / std;
    }
}

#[derive(Debug, Clone)]
pub struct PpoAgent {
    head: PpoHead,
    policy: Mlp,
    log_std: Vec<f64>,
    value: Mlp,
    policy_opt: Adam,
    log_std_opt: Adam,
    value_opt: Adam,
    clip_ratio: f64,
    epochs: usize,
    batch_size: usize,
    entropy_coef: f64,
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(
        obs_len: usize,
        space: ActionSpace,
        config: &AgentConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        let (head, out) = match space {
            ActionSpace::Discrete { branches, choices } if branches > 0 && choices > 0 => {
                (PpoHead::Categorical { branches, choices }, branches * choices)
            }
            ActionSpace::Continuous { dim } if dim > 0 => (PpoHead::Gaussian { dim }, dim),
            other => return Err(AgentError::IncompatibleActionSpace(format!("empty action space {other:?}"))),
        };
        let mut policy = Mlp::new(&config.layer_sizes(obs_len, out), config.hidden_activation, Activation::Identity, rng);
        policy.scale_output_layer(POLICY_OUTPUT_SCALE);
        let value = Mlp::new(&config.layer_sizes(obs_len, 1), config.hidden_activation, Activation::Identity, rng);
        let log_std = match head {
            PpoHead::Gaussian { dim } => vec![config.initial_log_std; dim],
            PpoHead::Categorical { .. } => Vec::new(),
        };
        Ok(Self {
            head,
            policy_opt: Adam::new(policy.param_count(), config.actor_lr),
            log_std_opt: Adam::new(log_std.len(), config.actor_lr),
            value_opt: Adam::new(value.param_count(), config.critic_lr),
            policy,
            log_std,
            value,
            clip_ratio: config.clip_ratio,
            epochs: config.epochs,
            batch_size: config.batch_size,
            entropy_coef: config.entropy_coef,
        })
    }

    pub fn head(&self) -> PpoHead {
        self.head
    }

    pub fn policy_network(&self) -> &Mlp {
        &self.policy
    }

    pub fn policy_network_mut(&mut self) -> &mut Mlp {
        &mut self.policy
    }

    pub fn value_network(&self) -> &Mlp {
        &self.value
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn value(&self, input: &[f64]) -> Result<f64, AgentError> {
        Ok(self.value.forward(input)?[0])
    }

    /// Per-branch action probabilities of a categorical head.
    pub fn probabilities(&self, input: &[f64]) -> Result<Vec<Vec<f64>>, AgentError> {
        let logits = self.policy.forward(input)?;
        Ok(match self.head {
            PpoHead::Categorical { choices, .. } => logits.chunks_exact(choices).map(softmax).collect(),
            PpoHead::Gaussian { .. } => {
                return Err(AgentError::IncompatibleActionSpace("Gaussian head has no probabilities".into()))
            }
        })
    }

    pub fn log_prob(&self, input: &[f64], action: &[f64]) -> Result<f64, AgentError> {
        let out = self.policy.forward(input)?;
        Ok(self.log_prob_from_output(&out, action))
    }

    fn log_prob_from_output(&self, out: &[f64], action: &[f64]) -> f64 {
        match self.head {
            PpoHead::Categorical { branches, .. } => {
                let idx: Vec<usize> = action.iter().map(|a| *a as usize).collect();
                categorical_log_prob(out, branches, &idx)
            }
            PpoHead::Gaussian { .. } => gaussian_log_prob(out, &self.log_std, action),
        }
    }

    /// Samples an action. Returns the action for the environment, the form
    /// stored for the loss, and its log-probability.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        input: &[f64],
        rng: &mut R,
    ) -> Result<(AgentAction, Vec<f64>, f64), AgentError> {
        let out = self.policy.forward(input)?;
        let (env_action, stored) = match self.head {
            PpoHead::Categorical { choices, .. } => {
                let picks: Vec<usize> = out
                    .chunks_exact(choices)
                    .map(|block| {
                        let p = softmax(block);
                        let u: f64 = rng.random();
                        let mut acc = 0.0;
                        p.iter().position(|pi| {
                            acc += pi;
                            u < acc
                        })
                        .unwrap_or(choices - 1)
                    })
                    .collect();
                let stored = picks.iter().map(|c| *c as f64).collect();
                (AgentAction::Discrete(picks), stored)
            }
            PpoHead::Gaussian { .. } => {
                let raw: Vec<f64> = out
                    .iter()
                    .zip(&self.log_std)
                    .map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                (AgentAction::Continuous(raw.iter().map(|x| x.clamp(-1.0, 1.0)).collect()), raw)
            }
        };
        let lp = self.log_prob_from_output(&out, &stored);
        Ok((env_action, stored, lp))
    }

    /// Gradient of the clipped surrogate over `samples` with clip ratio `clip`.
    pub fn surrogate_gradient(&self, samples: &[RolloutSample], clip: f64) -> Result<SurrogateGradient, AgentError> {
        let scale = 1.0 / samples.len() as f64;
        let mut policy_grads = vec![0.0; self.policy.param_count()];
        let mut log_std_grads = vec![0.0; self.log_std.len()];
        let mut ratios = Vec::with_capacity(samples.len());
        let mut clipped = 0usize;
        let mut loss = 0.0;
        for s in samples {
            let tape = self.policy.forward_tape(&s.observation)?;
            let out = tape.output();
            let lp = self.log_prob_from_output(out, &s.action);
            let ratio = (lp - s.log_prob).exp();
            ratios.push(ratio);
            let unclipped = ratio * s.advantage;
            let bounded = ratio.clamp(1.0 - clip, 1.0 + clip) * s.advantage;
            loss -= unclipped.min(bounded) * scale;
            // d loss / d log_prob; zero when the clipped branch is the minimum.
            let d_lp = if unclipped <= bounded {
                -s.advantage * ratio * scale
            } else {
                clipped += 1;
                0.0
            };
            let upstream: Vec<f64> = match self.head {
                PpoHead::Categorical { branches, .. } => {
                    let idx: Vec<usize> = s.action.iter().map(|a| *a as usize).collect();
                    let g = categorical_log_prob_grad(out, branches, &idx);
                    let mut up: Vec<f64> = g.iter().map(|x| d_lp * x).collect();
                    if self.entropy_coef != 0.0 {
                        loss -= self.entropy_coef * categorical_entropy(out, branches) * scale;
                        for (u, e) in up.iter_mut().zip(categorical_entropy_grad(out, branches)) {
                            *u -= self.entropy_coef * e * scale;
                        }
                    }
                    up
                }
                PpoHead::Gaussian { .. } => {
                    let (d_mean, d_log_std) = gaussian_log_prob_grad(out, &self.log_std, &s.action);
                    for (g, d) in log_std_grads.iter_mut().zip(d_log_std) {
                        // Gaussian entropy is sum(log_std) + const, so its
                        // gradient with respect to each log std is 1.
                        *g += d_lp * d - self.entropy_coef * scale;
                    }
                    if self.entropy_coef != 0.0 {
                        loss -= self.entropy_coef * self.log_std.iter().sum::<f64>() * scale;
                    }
                    d_mean.iter().map(|x| d_lp * x).collect()
                }
            };
            self.policy.backward(&tape, &upstream, &mut policy_grads)?;
        }
        Ok(SurrogateGradient {
            loss,
            policy_grads,
            log_std_grads,
            ratios,
            clipped_fraction: clipped as f64 * scale,
        })
    }

    /// Mean squared error of the value head against `ret`, and its gradient.
    pub fn value_gradient(&self, samples: &[RolloutSample]) -> Result<(f64, Vec<f64>), AgentError> {
        let scale = 1.0 / samples.len() as f64;
        let mut grads = vec![0.0; self.value.param_count()];
        let mut loss = 0.0;
        for s in samples {
            let tape = self.value.forward_tape(&s.observation)?;
            let err = tape.output()[0] - s.ret;
            loss += err * err * scale;
            self.value.backward(&tape, &[2.0 * err * scale], &mut grads)?;
        }
        Ok((loss, grads))
    }

    /// Runs `epochs` passes of shuffled minibatches over `samples`. Returns
    /// the mean surrogate and value losses.
    pub fn update<R: Rng + ?Sized>(&mut self, samples: &[RolloutSample], rng: &mut R) -> Result<(f64, f64), AgentError> {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let batch = self.batch_size.min(samples.len()).max(1);
        let (mut policy_loss, mut value_loss, mut count) = (0.0, 0.0, 0usize);
        for _ in 0..self.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(batch) {
                let mb: Vec<RolloutSample> = chunk.iter().map(|i| samples[*i].clone()).collect();
                let surrogate = self.surrogate_gradient(&mb, self.clip_ratio)?;
                self.policy_opt.step(self.policy.params_mut(), &surrogate.policy_grads);
                if !self.log_std.is_empty() {
                    self.log_std_opt.step(&mut self.log_std, &surrogate.log_std_grads);
                }
                let (vl, vg) = self.value_gradient(&mb)?;
                self.value_opt.step(self.value.params_mut(), &vg);
                policy_loss += surrogate.loss;
                value_loss += vl;
                count += 1;
            }
        }
        Ok((policy_loss / count as f64, value_loss / count as f64))
    }

    fn policy_head(&self) -> PolicyHead {
        match self.head {
            PpoHead::Categorical { branches, .. } => PolicyHead::Categorical { branches },
            PpoHead::Gaussian { .. } => PolicyHead::Gaussian { log_std: self.log_std.clone() },
        }
    }
}

pub fn train_ppo<E: Environment + ?Sized>(env: &mut E, config: &AgentConfig) -> Result<Policy, AgentError> {
    train_ppo_with(env, config, &mut NoopObserver)
}

pub fn train_ppo_with<E: Environment + ?Sized>(
    env: &mut E,
    config: &AgentConfig,
    observer: &mut dyn TrainObserver,
) -> Result<Policy, AgentError> {
    config.validate()?;
    let space = env.action_space();
    let head_kind = match space {
        ActionSpace::Discrete { .. } => gradcheck::HeadKind::Categorical,
        ActionSpace::Continuous { .. } => gradcheck::HeadKind::Gaussian,
    };
    gradcheck::self_test(config.hidden_activation, &[head_kind, gradcheck::HeadKind::Value])?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let obs_len = env.observation_len();
    let mut agent = PpoAgent::new(obs_len, space, config, &mut rng)?;
    let mut filter = ObservationFilter::new(obs_len, config.normalize_observations);
    let mut tracker = EpisodeTracker::default();
    let snapshot = |agent: &PpoAgent, filter: &ObservationFilter| {
        Policy::new(Algorithm::Ppo, space, agent.policy_head(), agent.policy.clone(), filter.snapshot())
    };

    let mut samples: Vec<RolloutSample> = Vec::with_capacity(config.rollout_len);
    let (mut rewards, mut values, mut dones) = (Vec::new(), Vec::new(), Vec::new());
    let mut obs = env.reset();
    filter.observe(&obs);
    for step in 0..config.total_steps {
        let input = filter.apply(&obs);
        let (action, stored, log_prob) = agent.sample(&input, &mut rng)?;
        values.push(agent.value(&input)?);
        let tr = env.step(&action)?;
        filter.observe(&tr.observation);
        tracker.add_reward(tr.reward);
        rewards.push(tr.reward);
        dones.push(tr.done);
        samples.push(RolloutSample { observation: input, action: stored, log_prob, advantage: 0.0, ret: 0.0 });
        obs = if tr.done {
            observer.on_episode(&tracker.finish(step + 1))?;
            let first = env.reset();
            filter.observe(&first);
            first
        } else {
            tr.observation
        };

        if samples.len() == config.rollout_len || step + 1 == config.total_steps {
            let last_value = if tr.done { 0.0 } else { agent.value(&filter.apply(&obs))? };
            let (mut advantages, returns) =
                compute_gae(&rewards, &values, &dones, last_value, config.gamma, config.gae_lambda);
            normalize_in_place(&mut advantages);
            for ((s, a), r) in samples.iter_mut().zip(advantages).zip(returns) {
                s.advantage = a;
                s.ret = r;
            }
            let (policy_loss, value_loss) = agent.update(&samples, &mut rng)?;
            tracker.add_actor(policy_loss, step + 1)?;
            tracker.add_critic(value_loss, step + 1)?;
            samples.clear();
            rewards.clear();
            values.clear();
            dones.clear();
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
