//! Central finite-difference validation of every network head.
//!
//! Each head pairs an [`Mlp`] with the loss the training loops differentiate
//! through it. The analytic gradient produced by backpropagation is compared
//! against `(L(θ + h e_i) - L(θ - h e_i)) / 2h` for every parameter. When a
//! perturbation moves a ReLU unit across zero the loss is not differentiable
//! along that axis, so those coordinates are skipped.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::heads::{
    categorical_entropy, categorical_entropy_grad, categorical_log_prob, categorical_log_prob_grad, gaussian_log_prob,
    gaussian_log_prob_grad,
};
use super::{concat, Activation, AgentError, Mlp};

pub const FD_STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
/// Random parameterizations per head in [`self_test`].
pub const TRIALS: usize = 20;
const SELF_TEST_SEED: u64 = 0x6772_6164;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    /// DQN: squared TD error on one action's Q-value.
    QValue,
    /// DDPG/TD3 actor: `-Q(s, mu(s))` backpropagated through a fixed critic.
    DeterministicActor,
    /// PPO discrete: advantage-weighted log-probability plus entropy bonus.
    Categorical,
    /// PPO continuous: advantage-weighted Gaussian log-density, including
    /// the state-independent log std.
    Gaussian,
    /// PPO value function: squared error against a return.
    Value,
}

impl HeadKind {
    pub const ALL: [HeadKind; 5] =
        [HeadKind::QValue, HeadKind::DeterministicActor, HeadKind::Categorical, HeadKind::Gaussian, HeadKind::Value];
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadKind::QValue => "Q-value",
            HeadKind::DeterministicActor => "deterministic actor",
            HeadKind::Categorical => "categorical",
            HeadKind::Gaussian => "Gaussian",
            HeadKind::Value => "value",
        })
    }
}

/// `|a - n| / max(|a|, |n|, 1e-6)`; the floor keeps vanishing gradients from
/// turning rounding noise into large relative errors.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error between `analytic` and central differences of
/// `loss` around `params`. `loss` returns `None` at points where it is not
/// smooth relative to `params`, and that coordinate is skipped.
pub fn check_gradient<F>(params: &[f64], analytic: &[f64], loss: F) -> f64
where
    F: Fn(&[f64]) -> Option<f64>,
{
    assert_eq!(params.len(), analytic.len());
    let mut worst: f64 = 0.0;
    let mut probe = params.to_vec();
    for i in 0..params.len() {
        probe[i] = params[i] + FD_STEP;
        let plus = loss(&probe);
        probe[i] = params[i] - FD_STEP;
        let minus = loss(&probe);
        probe[i] = params[i];
        if let (Some(p), Some(m)) = (plus, minus) {
            worst = worst.max(relative_error(analytic[i], (p - m) / (2.0 * FD_STEP)));
        }
    }
    worst
}

fn with_params(net: &Mlp, params: &[f64]) -> Mlp {
    let mut copy = net.clone();
    copy.params_mut().copy_from_slice(params);
    copy
}

fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

const OBS: usize = 3;
const HIDDEN: [usize; 2] = [5, 4];

fn random_net<R: Rng + ?Sized>(rng: &mut R, input: usize, output: usize, hidden: Activation, out: Activation) -> Mlp {
    let mut sizes = vec![input];
    sizes.extend(HIDDEN);
    sizes.push(output);
    let mut net = Mlp::new(&sizes, hidden, out, rng);
    // Spread the parameters beyond the init scale so more units are active
    // and the output layer is not negligible.
    for p in net.params_mut() {
        *p *= 1.5;
    }
    net
}

/// Checks one random parameterization of `head` and returns the worst
/// relative error over all checked coordinates.
pub fn check_head<R: Rng + ?Sized>(head: HeadKind, activation: Activation, rng: &mut R) -> Result<f64, AgentError> {
    let input = gaussian_vec(rng, OBS);
    match head {
        HeadKind::QValue | HeadKind::Value => {
            let n_out = if head == HeadKind::Value { 1 } else { 3 };
            let net = random_net(rng, OBS, n_out, activation, Activation::Identity);
            let action = rng.random_range(0..n_out);
            let target: f64 = rng.sample(StandardNormal);
            let tape = net.forward_tape(&input)?;
            let pattern = tape.sign_pattern();
            let mut upstream = vec![0.0; n_out];
            upstream[action] = tape.output()[action] - target;
            let mut grads = vec![0.0; net.param_count()];
            net.backward(&tape, &upstream, &mut grads)?;
            Ok(check_gradient(net.params(), &grads, |p| {
                let tape = with_params(&net, p).forward_tape(&input).ok()?;
                (tape.sign_pattern() == pattern).then(|| 0.5 * (tape.output()[action] - target).powi(2))
            }))
        }
        HeadKind::DeterministicActor => {
            let act_dim = 2;
            let actor = random_net(rng, OBS, act_dim, activation, Activation::Tanh);
            let critic = random_net(rng, OBS + act_dim, 1, activation, Activation::Identity);
            let actor_tape = actor.forward_tape(&input)?;
            let critic_tape = critic.forward_tape(&concat(&input, actor_tape.output()))?;
            let patterns = (actor_tape.sign_pattern(), critic_tape.sign_pattern());
            let mut scratch = vec![0.0; critic.param_count()];
            let d_input = critic.backward(&critic_tape, &[-1.0], &mut scratch)?;
            let mut grads = vec![0.0; actor.param_count()];
            actor.backward(&actor_tape, &d_input[OBS..], &mut grads)?;
            Ok(check_gradient(actor.params(), &grads, |p| {
                let a_tape = with_params(&actor, p).forward_tape(&input).ok()?;
                let c_tape = critic.forward_tape(&concat(&input, a_tape.output())).ok()?;
                let same = a_tape.sign_pattern() == patterns.0 && c_tape.sign_pattern() == patterns.1;
                same.then(|| -c_tape.output()[0])
            }))
        }
        HeadKind::Categorical => {
            let (branches, choices) = (2, 3);
            let net = random_net(rng, OBS, branches * choices, activation, Activation::Identity);
            let actions: Vec<usize> = (0..branches).map(|_| rng.random_range(0..choices)).collect();
            let advantage: f64 = rng.sample(StandardNormal);
            let entropy_coef = 0.05;
            let tape = net.forward_tape(&input)?;
            let pattern = tape.sign_pattern();
            let d_logp = categorical_log_prob_grad(tape.output(), branches, &actions);
            let d_ent = categorical_entropy_grad(tape.output(), branches);
            let upstream: Vec<f64> = d_logp.iter().zip(&d_ent).map(|(g, e)| -advantage * g - entropy_coef * e).collect();
            let mut grads = vec![0.0; net.param_count()];
            net.backward(&tape, &upstream, &mut grads)?;
            Ok(check_gradient(net.params(), &grads, |p| {
                let tape = with_params(&net, p).forward_tape(&input).ok()?;
                let logits = tape.output();
                (tape.sign_pattern() == pattern).then(|| {
                    -advantage * categorical_log_prob(logits, branches, &actions)
                        - entropy_coef * categorical_entropy(logits, branches)
                })
            }))
        }
        HeadKind::Gaussian => {
            let dim = 2;
            let net = random_net(rng, OBS, dim, activation, Activation::Identity);
            let log_std: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..0.5)).collect();
            let action = gaussian_vec(rng, dim);
            let advantage: f64 = rng.sample(StandardNormal);
            let tape = net.forward_tape(&input)?;
            let pattern = tape.sign_pattern();
            let (d_mean, d_log_std) = gaussian_log_prob_grad(tape.output(), &log_std, &action);
            let upstream: Vec<f64> = d_mean.iter().map(|g| -advantage * g).collect();
            let mut grads = vec![0.0; net.param_count()];
            net.backward(&tape, &upstream, &mut grads)?;
            grads.extend(d_log_std.iter().map(|g| -advantage * g));
            let n = net.param_count();
            let all = concat(net.params(), &log_std);
            Ok(check_gradient(&all, &grads, |p| {
                let tape = with_params(&net, &p[..n]).forward_tape(&input).ok()?;
                (tape.sign_pattern() == pattern).then(|| -advantage * gaussian_log_prob(tape.output(), &p[n..], &action))
            }))
        }
    }
}

/// Worst relative error of each head over `trials` random parameterizations.
pub fn check_heads(
    activation: Activation,
    heads: &[HeadKind],
    trials: usize,
    seed: u64,
) -> Result<Vec<(HeadKind, f64)>, AgentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    heads
        .iter()
        .map(|head| {
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                worst = worst.max(check_head(*head, activation, &mut rng)?);
            }
            Ok((*head, worst))
        })
        .collect()
}

/// Construction-time check run by every training loop before it starts.
pub fn self_test(activation: Activation, heads: &[HeadKind]) -> Result<(), AgentError> {
    for (head, error) in check_heads(activation, heads, TRIALS, SELF_TEST_SEED)? {
        if !(error < TOLERANCE) {
            return Err(AgentError::GradientCheck { head: head.to_string(), error });
        }
    }
    Ok(())
}
