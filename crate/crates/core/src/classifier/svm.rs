use rand::seq::SliceRandom;

use super::check_training_input;
use crate::error::{Error, Result};
use crate::prob::argmax;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub learning_rate: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            lambda: 1e-3,
            epochs: 50,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVM trained by stochastic subgradient descent on the
/// regularized hinge loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    n_classes: usize,
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearSvm {
    pub fn train(features: &[&[f64]], labels: &[usize], n_classes: usize, config: &SvmConfig) -> Result<Self> {
        let dim = check_training_input(features, labels, n_classes)?;
        let mut weights = vec![0.0; n_classes * dim];
        let mut bias = vec![0.0; n_classes];
        let mut order: Vec<usize> = (0..features.len()).collect();
        let mut rng = seeded(config.seed);
        let mut t = 0usize;
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let step = config.learning_rate / (t as f64).sqrt();
                let x = features[i];
                for c in 0..n_classes {
                    let y = if labels[i] == c { 1.0 } else { -1.0 };
                    let w = &mut weights[c * dim..(c + 1) * dim];
                    let margin = y * (bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
                    let shrink = 1.0 - step * config.lambda;
                    w.iter_mut().for_each(|wk| *wk *= shrink);
                    if margin < 1.0 {
                        w.iter_mut().zip(x).for_each(|(wk, xk)| *wk += step * y * xk);
                        bias[c] += step * y;
                    }
                }
            }
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("SVM weights"));
        }
        Ok(Self {
            n_classes,
            dim,
            weights,
            bias,
        })
    }

    pub fn decision(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((0..self.n_classes)
            .map(|c| {
                let w = &self.weights[c * self.dim..(c + 1) * self.dim];
                self.bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.decision(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_three_clusters() {
        let centers = [[0.0, 4.0], [4.0, 0.0], [-4.0, -4.0]];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for k in 0..10 {
                let jitter = (k as f64 - 4.5) * 0.1;
                x.push(vec![center[0] + jitter, center[1] - jitter]);
                y.push(c);
            }
        }
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let svm = LinearSvm::train(&refs, &y, 3, &SvmConfig::default()).unwrap();
        for (xi, &yi) in refs.iter().zip(&y) {
            assert_eq!(svm.predict(xi).unwrap(), yi);
        }
    }
}
