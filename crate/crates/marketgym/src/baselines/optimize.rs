//! Long-only portfolio weights by projected gradient descent on the
//! probability simplex.

use super::BaselineError;
use crate::linalg::{cholesky, mat_vec, mean_and_covariance, quadratic_form, regularize};

/// Non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(weights: Vec<f64>) -> Result<Self, BaselineError> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(BaselineError::InvalidWeights("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(BaselineError::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self(weights))
    }

    pub fn equal(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Euclidean projection onto `{w : w >= 0, sum(w) = 1}` by the sort-based
/// threshold rule.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Iteration cap for [`minimize_on_simplex`].
pub const MAX_ITERATIONS: usize = 100_000;
/// Stop once no weight moves by more than this in one iteration.
pub const STEP_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub weights: Vec<f64>,
    /// `lambda * w' S w - mu' w` at the solution.
    pub objective: f64,
    pub iterations: usize,
}

/// Minimizes `lambda * w' S w - mu' w` over the simplex, starting from equal
/// weights with step `1 / L`, where `L = 2 lambda min(trace, max row sum)`
/// bounds the gradient's Lipschitz constant. The objective is checked to
/// never increase.
pub fn minimize_on_simplex(cov: &[f64], n: usize, mu: &[f64], lambda: f64) -> SimplexSolution {
    let objective = |w: &[f64]| lambda * quadratic_form(cov, n, w) - mu.iter().zip(w).map(|(m, x)| m * x).sum::<f64>();
    let trace: f64 = (0..n).map(|i| cov[i * n + i]).sum();
    let row_sum = (0..n).map(|i| (0..n).map(|j| cov[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max);
    let lipschitz = 2.0 * lambda * trace.min(row_sum);
    let scale = lambda * trace + mu.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    let mut w = vec![1.0 / n as f64; n];
    let mut f = objective(&w);
    if !(lipschitz > 0.0) {
        // Linear objective: the best vertex, splitting ties evenly.
        let best = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let winners = mu.iter().filter(|m| **m == best).count() as f64;
        let weights: Vec<f64> = mu.iter().map(|m| if *m == best { 1.0 / winners } else { 0.0 }).collect();
        let objective = objective(&weights);
        return SimplexSolution { weights, objective, iterations: 1 };
    }
    let step = 1.0 / lipschitz;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let sw = mat_vec(cov, n, &w);
        let trial: Vec<f64> = w.iter().zip(&sw).zip(mu).map(|((x, s), m)| x - step * (2.0 * lambda * s - m)).collect();
        let next = project_to_simplex(&trial);
        let f_next = objective(&next);
        assert!(
            f_next <= f + 1e-12 * (f.abs() + scale),
            "projected gradient increased the objective from {f} to {f_next}"
        );
        let moved = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        f = f_next;
        if moved < STEP_TOLERANCE {
            break;
        }
    }
    SimplexSolution { weights: w, objective: f, iterations }
}

/// Regularized sample covariance and means of a `window x n` return matrix.
fn estimate(returns: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>, usize), BaselineError> {
    let n = returns.first().map_or(0, Vec::len);
    if n == 0 || returns.iter().any(|r| r.len() != n) {
        return Err(BaselineError::InvalidConfig("return rows must share a positive width".into()));
    }
    if returns.len() < n + 2 {
        return Err(BaselineError::InsufficientHistory { required: n + 2, available: returns.len() });
    }
    let (mean, mut cov) = mean_and_covariance(returns);
    regularize(&mut cov, n, None);
    if cholesky(&cov, n).is_none() {
        return Err(BaselineError::SingularCovariance);
    }
    Ok((mean, cov, n))
}

/// Long-only minimum-variance weights for a `window x n` return matrix.
pub fn min_variance_weights(returns: &[Vec<f64>]) -> Result<WeightVector, BaselineError> {
    let (_, cov, n) = estimate(returns)?;
    WeightVector::new(minimize_on_simplex(&cov, n, &vec![0.0; n], 1.0).weights)
}

/// Long-only weights maximizing `w' mu - lambda w' S w`.
pub fn mean_variance_weights(returns: &[Vec<f64>], risk_aversion: f64) -> Result<WeightVector, BaselineError> {
    if !(risk_aversion.is_finite() && risk_aversion >= 0.0) {
        return Err(BaselineError::InvalidConfig(format!("risk aversion {risk_aversion} must be >= 0")));
    }
    let (mean, cov, n) = estimate(returns)?;
    WeightVector::new(minimize_on_simplex(&cov, n, &mean, risk_aversion).weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_of_simplex_point_is_identity() {
        let w = [0.2, 0.3, 0.5];
        let p = project_to_simplex(&w);
        for (a, b) in p.iter().zip(w) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_hand_cases() {
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(project_to_simplex(&[0.5, 0.5, -1.0]), vec![0.5, 0.5, 0.0]);
        let p = project_to_simplex(&[1.0, 1.0]);
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn zero_risk_aversion_picks_the_best_mean() {
        let cov = [1.0, 0.0, 0.0, 1.0];
        let sol = minimize_on_simplex(&cov, 2, &[0.1, 0.3], 0.0);
        assert_eq!(sol.weights, vec![0.0, 1.0]);
    }

    #[test]
    fn diagonal_min_variance_closed_form() {
        // Variances 1 and 4: w1 = 4 / 5.
        let cov = [1.0, 0.0, 0.0, 4.0];
        let sol = minimize_on_simplex(&cov, 2, &[0.0, 0.0], 1.0);
        assert!((sol.weights[0] - 0.8).abs() < 1e-10);
    }
}
