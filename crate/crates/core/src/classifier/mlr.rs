//! Multinomial logistic regression trained by mini-batch gradient descent on
//! the L2-regularized cross-entropy. Passing an existing model warm-starts
//! training from its parameters, which is how new batches of accepted labels
//! are folded in.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::{check_training_input, Classifier};
use crate::error::{Error, Result};
use crate::prob::softmax;
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct MlrConfig {
    /// Initial step size; epoch `t` (1-based) uses `learning_rate / sqrt(t)`.
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlrConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2: 1e-4,
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlrModel {
    n_classes: usize,
    dim: usize,
    /// Row-major `n_classes x dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl MlrModel {
    pub fn zeros(n_classes: usize, dim: usize) -> Self {
        Self {
            n_classes,
            dim,
            weights: vec![0.0; n_classes * dim],
            bias: vec![0.0; n_classes],
        }
    }

    pub fn from_parts(n_classes: usize, dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != n_classes * dim {
            return Err(Error::DimensionMismatch {
                expected: n_classes * dim,
                got: weights.len(),
            });
        }
        if bias.len() != n_classes {
            return Err(Error::DimensionMismatch {
                expected: n_classes,
                got: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(Self {
            n_classes,
            dim,
            weights,
            bias,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.raw_scores(x))
    }

    fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                let w = &self.weights[c * self.dim..(c + 1) * self.dim];
                self.bias[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }
}

impl Classifier for MlrModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.scores(x)?))
    }
}

/// Mean cross-entropy plus `l2 / 2 * ||W||^2` (bias unregularized), with
/// its gradient with respect to the weights and the bias.
pub fn objective(model: &MlrModel, features: &[&[f64]], labels: &[usize], l2: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let rows: Vec<usize> = (0..features.len()).collect();
    accumulate(model, features, labels, &rows, l2)
}

fn accumulate(
    model: &MlrModel,
    features: &[&[f64]],
    labels: &[usize],
    rows: &[usize],
    l2: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let (n, d) = (model.n_classes, model.dim);
    let mut grad_w = vec![0.0; n * d];
    let mut grad_b = vec![0.0; n];
    let mut loss = 0.0;
    let scale = 1.0 / rows.len() as f64;
    for &r in rows {
        let x = features[r];
        let p = softmax(&model.raw_scores(x));
        loss -= p[labels[r]].max(f64::MIN_POSITIVE).ln() * scale;
        for c in 0..n {
            let delta = (p[c] - if c == labels[r] { 1.0 } else { 0.0 }) * scale;
            grad_b[c] += delta;
            let g = &mut grad_w[c * d..(c + 1) * d];
            g.iter_mut().zip(x).for_each(|(g, xi)| *g += delta * xi);
        }
    }
    loss += 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    grad_w.iter_mut().zip(&model.weights).for_each(|(g, w)| *g += l2 * w);
    (loss, grad_w, grad_b)
}

pub fn train_mlr(
    init: Option<&MlrModel>,
    features: &[&[f64]],
    labels: &[usize],
    n_classes: usize,
    config: &MlrConfig,
) -> Result<MlrModel> {
    train_mlr_traced(init, features, labels, n_classes, config).map(|(m, _)| m)
}

/// Like [`train_mlr`] but also returns the full-data objective after each epoch.
pub fn train_mlr_traced(
    init: Option<&MlrModel>,
    features: &[&[f64]],
    labels: &[usize],
    n_classes: usize,
    config: &MlrConfig,
) -> Result<(MlrModel, Vec<f64>)> {
    let dim = check_training_input(features, labels, n_classes)?;
    let mut model = match init {
        Some(m) => {
            if m.n_classes != n_classes || m.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: m.n_classes * m.dim,
                    got: n_classes * dim,
                });
            }
            m.clone()
        }
        None => MlrModel::zeros(n_classes, dim),
    };
    if config.batch_size == 0 || config.learning_rate.is_nan() || config.learning_rate <= 0.0 || config.l2 < 0.0 {
        return Err(Error::InvalidParameter(
            "MLR needs positive batch size and learning rate, non-negative l2".into(),
        ));
    }

    let mut rng = seeded(config.seed);
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let step = config.learning_rate / (epoch as f64).sqrt();
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let (_, gw, gb) = accumulate(&model, features, labels, chunk, config.l2);
            model.weights.iter_mut().zip(&gw).for_each(|(w, g)| *w -= step * g);
            model.bias.iter_mut().zip(&gb).for_each(|(b, g)| *b -= step * g);
        }
        if model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("MLR weights (learning rate too large?)"));
        }
        trace.push(objective(&model, features, labels, config.l2).0);
    }
    Ok((model, trace))
}

/// ```text
/// mlr <n_classes> <dim>
/// bias b_1 .. b_n
/// w_11 .. w_1d
/// ...
/// ```
pub fn write_checkpoint(model: &MlrModel) -> String {
    let mut out = String::new();
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "mlr {} {}", model.n_classes, model.dim);
    let _ = writeln!(out, "bias {}", join(&model.bias));
    for c in 0..model.n_classes {
        let _ = writeln!(out, "{}", join(&model.weights[c * model.dim..(c + 1) * model.dim]));
    }
    out
}

pub fn read_checkpoint(text: &str) -> Result<MlrModel> {
    let bad = |msg: &str| Error::Config(format!("checkpoint: {msg}"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
    let (n, d) = match header[..] {
        ["mlr", n, d] => (
            n.parse::<usize>().map_err(|_| bad("bad class count"))?,
            d.parse::<usize>().map_err(|_| bad("bad dimension"))?,
        ),
        _ => return Err(bad("expected `mlr <n> <d>` header")),
    };
    let parse = |s: &str| -> Result<Vec<f64>> {
        s.split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad("bad number")))
            .collect()
    };
    let bias_line = lines.next().ok_or_else(|| bad("missing bias"))?;
    let bias = parse(bias_line.strip_prefix("bias").ok_or_else(|| bad("missing bias"))?)?;
    let mut weights = Vec::with_capacity(n * d);
    for _ in 0..n {
        weights.extend(parse(lines.next().ok_or_else(|| bad("truncated weights"))?)?);
    }
    MlrModel::from_parts(n, d, weights, bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::argmax;

    fn toy() -> (Vec<Vec<f64>>, Vec<usize>) {
        let x = vec![
            vec![0.5, -1.0, 0.3, 2.0],
            vec![1.5, 0.2, -0.7, 0.1],
            vec![-0.3, 0.8, 1.1, -1.2],
            vec![0.9, -0.4, 0.0, 0.6],
            vec![-1.1, 1.3, 0.4, 0.2],
            vec![0.2, 0.2, -1.5, 1.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![-0.6, -0.9, 0.5, -0.3],
        ];
        (x, vec![0, 1, 2, 0, 2, 1, 0, 2])
    }

    /// Naive reference loss, written independently of `accumulate`.
    fn reference_loss(w: &[f64], b: &[f64], x: &[Vec<f64>], y: &[usize], l2: f64) -> f64 {
        let n = b.len();
        let d = x[0].len();
        let mut total = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            let s: Vec<f64> = (0..n)
                .map(|c| b[c] + (0..d).map(|k| w[c * d + k] * xi[k]).sum::<f64>())
                .collect();
            let lse = s.iter().map(|v| v.exp()).sum::<f64>().ln();
            total += lse - s[yi];
        }
        total / x.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = toy();
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let w: Vec<f64> = (0..12).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let b = vec![0.1, -0.2, 0.05];
        let l2 = 0.01;
        let model = MlrModel::from_parts(3, 4, w.clone(), b.clone()).unwrap();
        let (loss, gw, gb) = objective(&model, &refs, &y, l2);
        assert!((loss - reference_loss(&w, &b, &x, &y, l2)).abs() < 1e-12);

        let h = 1e-5;
        let mut max_err: f64 = 0.0;
        for i in 0..w.len() {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[i] += h;
            wm[i] -= h;
            let fd = (reference_loss(&wp, &b, &x, &y, l2) - reference_loss(&wm, &b, &x, &y, l2)) / (2.0 * h);
            max_err = max_err.max((fd - gw[i]).abs());
        }
        for i in 0..b.len() {
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp[i] += h;
            bm[i] -= h;
            let fd = (reference_loss(&w, &bp, &x, &y, l2) - reference_loss(&w, &bm, &x, &y, l2)) / (2.0 * h);
            max_err = max_err.max((fd - gb[i]).abs());
        }
        assert!(max_err < 1e-6, "max abs error {max_err}");
    }

    #[test]
    fn separable_one_dimensional_classes() {
        // Class 0 at x in [-2, -1.1], class 1 at [1.1, 2]: the threshold x = 0 separates them.
        let x: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = 1.1 + 0.09 * (i % 10) as f64;
                vec![if i < 10 { -t } else { t }]
            })
            .collect();
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let model = train_mlr(None, &refs, &y, 2, &MlrConfig::default()).unwrap();
        let correct = refs
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| model.predict(xi).unwrap() == yi)
            .count();
        assert_eq!(correct, 20);
    }

    #[test]
    fn zero_epochs_is_identity() {
        let (x, y) = toy();
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let start = train_mlr(
            None,
            &refs,
            &y,
            3,
            &MlrConfig {
                epochs: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let same = train_mlr(
            Some(&start),
            &refs,
            &y,
            3,
            &MlrConfig {
                epochs: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(same, start);
    }

    #[test]
    fn zero_model_is_uniform() {
        let p = MlrModel::zeros(4, 3).predict_proba(&[1.0, -2.0, 0.5]).unwrap();
        assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn logit_gap_of_two() {
        let model = MlrModel::from_parts(2, 1, vec![0.0, 0.0], vec![2.0, 0.0]).unwrap();
        let p = model.predict_proba(&[3.0]).unwrap();
        assert!((p[0] - 0.8808).abs() < 1e-4 && (p[1] - 0.1192).abs() < 1e-4);
        let shifted = MlrModel::from_parts(2, 1, vec![0.0, 0.0], vec![7.0, 5.0]).unwrap();
        let q = shifted.predict_proba(&[3.0]).unwrap();
        assert!((p[0] - q[0]).abs() < 1e-12);
    }

    #[test]
    fn loss_non_increasing_with_small_full_batch_steps() {
        let (x, y) = toy();
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let config = MlrConfig {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 64,
            ..Default::default()
        };
        let (_, trace) = train_mlr_traced(None, &refs, &y, 3, &config).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn errors_on_bad_input() {
        let empty: Vec<&[f64]> = Vec::new();
        assert!(matches!(
            train_mlr(None, &empty, &[], 2, &MlrConfig::default()),
            Err(Error::Empty(_))
        ));
        let x = [vec![f64::NAN]];
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        assert!(matches!(
            train_mlr(None, &refs, &[0], 2, &MlrConfig::default()),
            Err(Error::NonFinite(_))
        ));
        assert!(MlrModel::zeros(2, 3).predict_proba(&[1.0]).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let (x, y) = toy();
        let refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let model = train_mlr(
            None,
            &refs,
            &y,
            3,
            &MlrConfig {
                epochs: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let back = read_checkpoint(&write_checkpoint(&model)).unwrap();
        assert_eq!(back, model);
        assert_eq!(
            argmax(&back.predict_proba(&x[0]).unwrap()),
            model.predict(&x[0]).unwrap()
        );
    }
}
