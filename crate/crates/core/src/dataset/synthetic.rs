//! Synthetic structured data with a known co-occurrence generator.
//!
//! Class-conditional Gaussian features around per-class means, undirected
//! links whose class pairs follow a symmetric doubly stochastic matrix, and
//! attribute observations drawn from per-class attribute rows.
//!
//! The data-data generator is `c * P + (1 - c) * M` where `P` is a random
//! involution permutation (each class paired with one partner class, or with
//! itself) and `M` is a random mixture of symmetrized permutations. With
//! `concentration = 1` every neighbor of a class-`i` instance has class
//! `P(i)`. Attribute rows follow the same recipe with a class-to-attribute map.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, DatasetParts};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{sample_categorical, seeded, Rng};

/// Mass spread uniformly over all attribute classes in each observation.
pub const ATTRIBUTE_SMOOTHING: f64 = 0.01;

const MAX_LINK_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_classes: usize,
    pub m_attribute_classes: usize,
    pub feature_dim: usize,
    pub per_class: usize,
    /// Weight of the deterministic partner structure, in `[0, 1]`.
    pub concentration: f64,
    /// Distance of each class mean from the origin.
    pub separation: f64,
    /// Standard deviation of the isotropic feature noise.
    pub feature_noise: f64,
    pub links_per_instance: usize,
    pub attributes_per_instance: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_classes: 7,
            m_attribute_classes: 0,
            feature_dim: 16,
            per_class: 100,
            concentration: 0.8,
            separation: 2.0,
            feature_noise: 1.0,
            links_per_instance: 8,
            attributes_per_instance: 0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.n_classes < 2 {
            return bad("synthetic data needs at least two classes");
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive");
        }
        if self.per_class == 0 {
            return Err(Error::MissingClass(0));
        }
        if !(0.0..=1.0).contains(&self.concentration) {
            return bad("concentration must lie in [0, 1]");
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return bad("separation must be finite and non-negative");
        }
        if !(self.feature_noise.is_finite() && self.feature_noise >= 0.0) {
            return bad("feature_noise must be finite and non-negative");
        }
        if self.attributes_per_instance > 0 && self.m_attribute_classes == 0 {
            return bad("attributes_per_instance > 0 requires m_attribute_classes > 0");
        }
        Ok(())
    }
}

/// The generating distributions behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Row `i`: distribution of a class-`i` instance's neighbor classes.
    pub data_rows: Matrix,
    /// Row `i`: distribution of a class-`i` instance's attribute classes.
    pub attr_rows: Option<Matrix>,
    pub class_means: Vec<Vec<f64>>,
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let n = config.n_classes;
    let m = config.m_attribute_classes;
    let d = config.feature_dim;
    let mut rng = seeded(config.seed);

    let class_means = class_means(config, &mut rng);
    let data_rows = data_generator(n, config.concentration, &mut rng);
    let attr_rows = (m > 0).then(|| attribute_generator(n, m, config.concentration, &mut rng));

    let count = n * config.per_class;
    let labels: Vec<usize> = (0..n).flat_map(|c| std::iter::repeat_n(c, config.per_class)).collect();
    let features: Vec<Vec<f64>> = labels
        .iter()
        .map(|&c| {
            (0..d)
                .map(|k| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    class_means[c][k] + config.feature_noise * z
                })
                .collect()
        })
        .collect();

    let members: Vec<Vec<usize>> = (0..n)
        .map(|c| (c * config.per_class..(c + 1) * config.per_class).collect())
        .collect();
    let n_edges = config.links_per_instance * count / 2;
    let mut seen = HashSet::with_capacity(n_edges);
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        for _ in 0..MAX_LINK_ATTEMPTS {
            let ci = rng.random_range(0..n);
            let cj = sample_categorical(&mut rng, data_rows.row(ci));
            let a = members[ci][rng.random_range(0..members[ci].len())];
            let b = members[cj][rng.random_range(0..members[cj].len())];
            if a != b && seen.insert((a.min(b), a.max(b))) {
                edges.push((a.min(b), a.max(b)));
                break;
            }
        }
    }
    edges.sort_unstable();

    let attribute_obs: Vec<Vec<Vec<f64>>> = match &attr_rows {
        Some(rows) => labels
            .iter()
            .map(|&c| {
                (0..config.attributes_per_instance)
                    .map(|_| smoothed_one_hot(sample_categorical(&mut rng, rows.row(c)), m))
                    .collect()
            })
            .collect(),
        None => vec![Vec::new(); count],
    };

    let dataset = Dataset::from_parts(DatasetParts {
        features,
        labels,
        attribute_obs,
        edges,
        n_classes: n,
        m_attribute_classes: m,
        class_names: Vec::new(),
        source_ids: Vec::new(),
    })?;
    Ok((
        dataset,
        GroundTruth {
            data_rows,
            attr_rows,
            class_means,
        },
    ))
}

/// Axis-aligned means when there are enough dimensions, random unit
/// directions otherwise; both scaled by the separation.
fn class_means(config: &SyntheticConfig, rng: &mut Rng) -> Vec<Vec<f64>> {
    let (n, d) = (config.n_classes, config.feature_dim);
    (0..n)
        .map(|c| {
            let mut v = vec![0.0; d];
            if d >= n {
                v[c] = 1.0;
            } else {
                for x in v.iter_mut() {
                    *x = StandardNormal.sample(&mut *rng);
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                v.iter_mut().for_each(|x| *x /= norm);
            }
            v.into_iter().map(|x| x * config.separation).collect()
        })
        .collect()
}

fn data_generator(n: usize, concentration: f64, rng: &mut Rng) -> Matrix {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut partner: Vec<usize> = (0..n).collect();
    for pair in order.chunks(2) {
        if let [a, b] = *pair {
            partner[a] = b;
            partner[b] = a;
        }
    }

    let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut mixture = Matrix::zeros(n, n);
    for w in weights {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for (i, &p) in perm.iter().enumerate() {
            mixture[(i, p)] += 0.5 * w / total;
            mixture[(p, i)] += 0.5 * w / total;
        }
    }

    let mut rows = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let structured = if partner[i] == j { 1.0 } else { 0.0 };
            rows[(i, j)] = concentration * structured + (1.0 - concentration) * mixture[(i, j)];
        }
    }
    rows
}

fn attribute_generator(n: usize, m: usize, concentration: f64, rng: &mut Rng) -> Matrix {
    let mut attrs: Vec<usize> = (0..m).collect();
    attrs.shuffle(rng);
    let mut rows = Matrix::zeros(n, m);
    for c in 0..n {
        let target = attrs[c % m];
        let mut background: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 1e-3).collect();
        crate::prob::normalize(&mut background);
        for a in 0..m {
            let structured = if a == target { 1.0 } else { 0.0 };
            rows[(c, a)] = concentration * structured + (1.0 - concentration) * background[a];
        }
    }
    rows
}

fn smoothed_one_hot(index: usize, m: usize) -> Vec<f64> {
    let mut v = vec![ATTRIBUTE_SMOOTHING / m as f64; m];
    v[index] += 1.0 - ATTRIBUTE_SMOOTHING;
    v
}
