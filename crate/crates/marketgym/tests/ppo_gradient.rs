//! The clipped surrogate reduces to the policy gradient when nothing is
//! clipped; compared against finite differences of `-mean(A log pi)`.

use marketgym::agents::{ActionSpace, AgentConfig, Algorithm, PpoAgent, RolloutSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn samples(agent: &PpoAgent, rng: &mut ChaCha8Rng, obs_len: usize) -> Vec<RolloutSample> {
    (0..32)
        .map(|_| {
            let observation: Vec<f64> = (0..obs_len).map(|_| rng.sample(StandardNormal)).collect();
            let (_, action, log_prob) = agent.sample(&observation, rng).unwrap();
            RolloutSample { observation, action, log_prob, advantage: rng.sample(StandardNormal), ret: 0.0 }
        })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(a) * norm(b))
}

fn check(space: ActionSpace) {
    let obs_len = 4;
    let cfg = AgentConfig { hidden: vec![8, 8], entropy_coef: 0.0, ..AgentConfig::new(Algorithm::Ppo) };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut agent = PpoAgent::new(obs_len, space, &cfg, &mut rng).unwrap();
    // Undo the small output-layer initialization so the gradient is not tiny.
    for p in agent.policy_network_mut().params_mut() {
        *p *= 3.0;
    }
    let batch = samples(&agent, &mut rng, obs_len);
    let grad = agent.surrogate_gradient(&batch, f64::INFINITY).unwrap();
    assert!(grad.ratios.iter().all(|r| (r - 1.0).abs() < 1e-12));
    assert_eq!(grad.clipped_fraction, 0.0);

    let objective = |agent: &PpoAgent| -> f64 {
        -batch.iter().map(|s| s.advantage * agent.log_prob(&s.observation, &s.action).unwrap()).sum::<f64>()
            / batch.len() as f64
    };
    let h = 1e-6;
    let n = agent.policy_network().param_count();
    let mut numeric = vec![0.0; n];
    for (i, slot) in numeric.iter_mut().enumerate() {
        let base = agent.policy_network().params()[i];
        agent.policy_network_mut().params_mut()[i] = base + h;
        let plus = objective(&agent);
        agent.policy_network_mut().params_mut()[i] = base - h;
        let minus = objective(&agent);
        agent.policy_network_mut().params_mut()[i] = base;
        *slot = (plus - minus) / (2.0 * h);
    }
    let c = cosine(&grad.policy_grads, &numeric);
    println!("{space:?}: cosine {c}");
    assert!(c > 0.99, "cosine similarity {c}");
}

#[test]
fn categorical_surrogate_matches_policy_gradient() {
    check(ActionSpace::Discrete { branches: 2, choices: 3 });
}

#[test]
fn gaussian_surrogate_matches_policy_gradient() {
    check(ActionSpace::Continuous { dim: 2 });
}

#[test]
fn clipping_zeroes_gradients_outside_the_trust_region() {
    let cfg = AgentConfig { hidden: vec![8], entropy_coef: 0.0, ..AgentConfig::new(Algorithm::Ppo) };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let agent = PpoAgent::new(3, ActionSpace::Discrete { branches: 1, choices: 4 }, &cfg, &mut rng).unwrap();
    let mut batch = samples(&agent, &mut rng, 3);
    for s in &mut batch {
        // Old log-probabilities far below the current ones: ratios far above 1 + eps.
        s.log_prob -= 2.0;
        s.advantage = 1.0;
    }
    let grad = agent.surrogate_gradient(&batch, 0.2).unwrap();
    assert_eq!(grad.clipped_fraction, 1.0);
    assert!(grad.policy_grads.iter().all(|g| *g == 0.0));
}
