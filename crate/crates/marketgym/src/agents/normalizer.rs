use serde::{Deserialize, Serialize};

const CLIP: f64 = 10.0;
const EPS: f64 = 1e-8;

/// Running per-feature mean and variance (Welford), used to standardize
/// observations before they reach a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNormalizer {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningNormalizer {
    pub fn new(dim: usize) -> Self {
        Self { count: 0.0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2.0 {
            return vec![1.0; self.mean.len()];
        }
        self.m2.iter().map(|m| m / self.count).collect()
    }

    pub fn update(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.mean.len());
        self.count += 1.0;
        for ((mean, m2), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *mean;
            *mean += delta / self.count;
            *m2 += delta * (v - *mean);
        }
    }

    /// `(x - mean) / sqrt(var + eps)`, clipped to `±10`.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let var = self.variance();
        x.iter()
            .zip(&self.mean)
            .zip(&var)
            .map(|((v, m), s)| ((v - m) / (s + EPS).sqrt()).clamp(-CLIP, CLIP))
            .collect()
    }
}

/// Optional running normalization applied to observations before they reach
/// a network.
#[derive(Debug, Clone)]
pub struct ObservationFilter {
    normalizer: Option<RunningNormalizer>,
}

impl ObservationFilter {
    pub fn new(dim: usize, enabled: bool) -> Self {
        Self { normalizer: enabled.then(|| RunningNormalizer::new(dim)) }
    }

    pub fn observe(&mut self, obs: &[f64]) {
        if let Some(n) = &mut self.normalizer {
            n.update(obs);
        }
    }

    pub fn apply(&self, obs: &[f64]) -> Vec<f64> {
        match &self.normalizer {
            Some(n) => n.normalize(obs),
            None => obs.to_vec(),
        }
    }

    pub fn snapshot(&self) -> Option<RunningNormalizer> {
        self.normalizer.clone()
    }
}
