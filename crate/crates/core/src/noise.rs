//! Label-noise injection.
//!
//! NCAR flips an exact share of every class to a uniformly chosen other
//! class. NAR draws each assigned label from the row of a transition matrix
//! indexed by the true label; the matrix is estimated from cluster
//! composition when no ground-truth noise process is available.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{sample_categorical, seeded};

const KMEANS_TOL: f64 = 1e-8;
const KMEANS_MAX_ITER: usize = 300;

/// Row-stochastic `P(assigned | true)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(Matrix);

impl TransitionMatrix {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.rows() == 0 {
            return Err(Error::NotStochastic(format!(
                "expected a non-empty square matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        for i in 0..matrix.rows() {
            let row = matrix.row(i);
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::NotStochastic(format!("row {i} has entries outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self(matrix))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n))
    }

    pub fn n_classes(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn row(&self, true_label: usize) -> &[f64] {
        self.0.row(true_label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePlan {
    pub assigned: Vec<usize>,
    pub flipped: Vec<bool>,
    /// Requested rate for NCAR, realized flip fraction for NAR.
    pub omega: f64,
    pub seed: u64,
}

impl NoisePlan {
    pub fn flip_count(&self) -> usize {
        self.flipped.iter().filter(|&&f| f).count()
    }

    /// `index,true,assigned,flipped` rows for audit.
    pub fn to_csv(&self, true_labels: &[usize]) -> Result<String> {
        if true_labels.len() != self.assigned.len() {
            return Err(Error::DimensionMismatch {
                expected: self.assigned.len(),
                got: true_labels.len(),
            });
        }
        let mut out = String::from("index,true,assigned,flipped\n");
        for (i, (&t, &a)) in true_labels.iter().zip(&self.assigned).enumerate() {
            let _ = writeln!(out, "{i},{t},{a},{}", u8::from(self.flipped[i]));
        }
        Ok(out)
    }
}

fn check_labels(labels: &[usize], n_classes: usize) -> Result<()> {
    match labels.iter().find(|&&y| y >= n_classes) {
        Some(&label) => Err(Error::InvalidLabel { label, n_classes }),
        None => Ok(()),
    }
}

/// Flips exactly `round(omega * |class i|)` uniformly chosen members of
/// every class `i`, each to a uniform class other than `i`.
pub fn inject_ncar(labels: &[usize], n_classes: usize, omega: f64, seed: u64) -> Result<NoisePlan> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::InvalidParameter(format!("noise rate {omega} outside [0, 1]")));
    }
    check_labels(labels, n_classes)?;
    let mut rng = seeded(seed);
    let mut assigned = labels.to_vec();
    let mut flipped = vec![false; labels.len()];
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        let count = (omega * members.len() as f64).round() as usize;
        if count == 0 {
            continue;
        }
        if n_classes < 2 {
            return Err(Error::InvalidParameter(
                "flipping labels needs at least two classes".into(),
            ));
        }
        members.shuffle(&mut rng);
        for &i in &members[..count] {
            // Uniform over the n - 1 other classes.
            let r = rng.random_range(0..n_classes - 1);
            assigned[i] = if r >= class { r + 1 } else { r };
            flipped[i] = true;
        }
    }
    Ok(NoisePlan {
        assigned,
        flipped,
        omega,
        seed,
    })
}

/// Draws every assigned label independently from the row of its true label.
pub fn inject_nar(labels: &[usize], transition: &TransitionMatrix, seed: u64) -> Result<NoisePlan> {
    check_labels(labels, transition.n_classes())?;
    let mut rng = seeded(seed);
    let assigned: Vec<usize> = labels
        .iter()
        .map(|&y| sample_categorical(&mut rng, transition.row(y)))
        .collect();
    let flipped: Vec<bool> = labels.iter().zip(&assigned).map(|(a, b)| a != b).collect();
    let omega = if labels.is_empty() {
        0.0
    } else {
        flipped.iter().filter(|&&f| f).count() as f64 / labels.len() as f64
    };
    Ok(NoisePlan {
        assigned,
        flipped,
        omega,
        seed,
    })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(centers: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(center, x);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

/// Lloyd iterations from the given centers. Returns final centers and the
/// cluster of every point; assignment ties go to the lower center index and
/// an empty cluster is reseeded at the point farthest from all centers.
pub fn kmeans(features: &[&[f64]], init: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut centers = init;
    let k = centers.len();
    let dim = centers.first().map_or(0, Vec::len);
    let mut assignment = vec![0; features.len()];
    for _ in 0..KMEANS_MAX_ITER {
        for (a, x) in assignment.iter_mut().zip(features) {
            *a = nearest(&centers, x);
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, x) in assignment.iter().zip(features) {
            counts[a] += 1;
            sums[a].iter_mut().zip(x.iter()).for_each(|(s, v)| *s += v);
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centers)
            .map(|((s, &c), old)| {
                if c == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / c as f64).collect()
                }
            })
            .collect();
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let farthest = (0..features.len()).fold(None, |best: Option<(usize, f64)>, i| {
                let d = next
                    .iter()
                    .map(|ctr| sq_dist(ctr, features[i]))
                    .fold(f64::INFINITY, f64::min);
                match best {
                    Some((_, bd)) if bd >= d => best,
                    _ => Some((i, d)),
                }
            });
            if let Some((i, _)) = farthest {
                next[c] = features[i].to_vec();
            }
        }
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        if shift < KMEANS_TOL {
            break;
        }
    }
    for (a, x) in assignment.iter_mut().zip(features) {
        *a = nearest(&centers, x);
    }
    (centers, assignment)
}

/// Estimates the transition matrix from cluster composition.
///
/// k-means starts from the per-class feature means. Clusters claim classes in
/// order of decreasing size (ties to the lower cluster index); each takes its
/// most frequent class not yet claimed. Row `y` is the normalized class
/// histogram of the cluster representing `y`.
pub fn estimate_transition(features: &[&[f64]], labels: &[usize], n_classes: usize) -> Result<TransitionMatrix> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    check_labels(labels, n_classes)?;
    let dim = features.first().map(|x| x.len()).ok_or(Error::Empty("features"))?;
    if let Some(x) = features.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    let mut means = vec![vec![0.0; dim]; n_classes];
    let mut sizes = vec![0usize; n_classes];
    for (x, &y) in features.iter().zip(labels) {
        sizes[y] += 1;
        means[y].iter_mut().zip(x.iter()).for_each(|(m, v)| *m += v);
    }
    if let Some(missing) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::MissingClass(missing));
    }
    for (m, &s) in means.iter_mut().zip(&sizes) {
        m.iter_mut().for_each(|v| *v /= s as f64);
    }

    let (_, assignment) = kmeans(features, means);
    let mut hist = vec![vec![0usize; n_classes]; n_classes];
    for (&c, &y) in assignment.iter().zip(labels) {
        hist[c][y] += 1;
    }
    let mut order: Vec<usize> = (0..n_classes).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(hist[c].iter().sum::<usize>()));
    let mut claimed_by = vec![None; n_classes];
    for c in order {
        let class = (0..n_classes)
            .filter(|&y| claimed_by[y].is_none())
            .fold(None, |best: Option<usize>, y| match best {
                Some(b) if hist[c][b] >= hist[c][y] => Some(b),
                _ => Some(y),
            })
            .expect("one unclaimed class per remaining cluster");
        claimed_by[class] = Some(c);
    }

    let mut rows = Matrix::zeros(n_classes, n_classes);
    for (y, cluster) in claimed_by.into_iter().enumerate() {
        let h = &hist[cluster.expect("every class claimed")];
        let total: usize = h.iter().sum();
        if total == 0 {
            rows[(y, y)] = 1.0;
        } else {
            for (t, &count) in h.iter().enumerate() {
                rows[(y, t)] = count as f64 / total as f64;
            }
        }
    }
    TransitionMatrix::new(rows)
}
