//! Log-probabilities and their gradients for stochastic policy heads.

use std::f64::consts::PI;

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_softmax_at(logits: &[f64], index: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits[index] - lse
}

/// Factorized categorical over `branches` independent choices, each with
/// `logits.len() / branches` options laid out contiguously.
pub fn categorical_log_prob(logits: &[f64], branches: usize, actions: &[usize]) -> f64 {
    let choices = logits.len() / branches;
    logits
        .chunks_exact(choices)
        .zip(actions)
        .map(|(block, a)| log_softmax_at(block, *a))
        .sum()
}

/// `d log pi(actions) / d logits`: `onehot - softmax` per branch.
pub fn categorical_log_prob_grad(logits: &[f64], branches: usize, actions: &[usize]) -> Vec<f64> {
    let choices = logits.len() / branches;
    let mut grad = Vec::with_capacity(logits.len());
    for (block, a) in logits.chunks_exact(choices).zip(actions) {
        let p = softmax(block);
        grad.extend(p.iter().enumerate().map(|(i, pi)| if i == *a { 1.0 - pi } else { -pi }));
    }
    grad
}

pub fn categorical_entropy(logits: &[f64], branches: usize) -> f64 {
    let choices = logits.len() / branches;
    logits
        .chunks_exact(choices)
        .map(|block| softmax(block).iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum::<f64>())
        .sum()
}

/// `d entropy / d logits`: `-p_i (ln p_i + H_b)` within each branch `b`.
pub fn categorical_entropy_grad(logits: &[f64], branches: usize) -> Vec<f64> {
    let choices = logits.len() / branches;
    let mut grad = Vec::with_capacity(logits.len());
    for block in logits.chunks_exact(choices) {
        let p = softmax(block);
        let h: f64 = p.iter().filter(|q| **q > 0.0).map(|q| -q * q.ln()).sum();
        grad.extend(p.iter().map(|q| if *q > 0.0 { -q * (q.ln() + h) } else { 0.0 }));
    }
    grad
}

/// Mode of each branch; ties resolve to the lowest index.
pub fn categorical_argmax(logits: &[f64], branches: usize) -> Vec<usize> {
    let choices = logits.len() / branches;
    logits.chunks_exact(choices).map(argmax).collect()
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Diagonal Gaussian log density.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let z = (a - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

/// Gradients of [`gaussian_log_prob`] with respect to the mean and log std.
pub fn gaussian_log_prob_grad(mean: &[f64], log_std: &[f64], action: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut d_mean = Vec::with_capacity(mean.len());
    let mut d_log_std = Vec::with_capacity(mean.len());
    for ((m, ls), a) in mean.iter().zip(log_std).zip(action) {
        let var = (2.0 * ls).exp();
        d_mean.push((a - m) / var);
        d_log_std.push((a - m) * (a - m) / var - 1.0);
    }
    (d_mean, d_log_std)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, 2.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[2] > p[1] && p[1] > p[0]);
    }

    #[test]
    fn categorical_grad_sums_to_zero() {
        let g = categorical_log_prob_grad(&[0.1, -0.4, 2.0, 1.0, 1.0, 0.0], 2, &[2, 0]);
        assert!((g[..3].iter().sum::<f64>()).abs() < 1e-12);
        assert!((g[3..].iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_density_at_zero() {
        let lp = gaussian_log_prob(&[0.0], &[0.0], &[0.0]);
        assert!((lp + 0.5 * (2.0 * PI).ln()).abs() < 1e-15);
    }
}
