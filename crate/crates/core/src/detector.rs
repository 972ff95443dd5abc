//! Context-aware noisy label detection.
//!
//! Each queried instance is scored by how much worse the posterior relations
//! of its assigned class fit the prior than those of any other class. Scores
//! are turned into batch-relative weights and thresholded.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::classifier::Classifier;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::inference::{build_instance_graph, posterior_conditionals, PosteriorConditionals};
use crate::matrix::Matrix;
use crate::prob::kl_divergence;
use crate::relationship::{prior_conditionals, Conditionals, RelationshipModel};

pub const DEFAULT_BETA: f64 = 0.85;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Remove,
    /// No linked instances or attributes to score against; always kept by
    /// the threshold filter.
    Unfilterable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Keep => "keep",
            Verdict::Remove => "remove",
            Verdict::Unfilterable => "unfilterable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEntry {
    pub id: usize,
    pub assigned: usize,
    /// Dissimilarity; zero for unfilterable instances.
    pub score: f64,
    pub gamma: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub entries: Vec<DetectionEntry>,
    pub max_score: f64,
    /// Threshold used, `None` for fixed-count removal.
    pub beta: Option<f64>,
}

impl DetectionResult {
    pub fn removed(&self) -> Vec<usize> {
        self.ids_where(|v| v == Verdict::Remove)
    }

    pub fn kept(&self) -> Vec<usize> {
        self.ids_where(|v| v != Verdict::Remove)
    }

    fn ids_where(&self, f: impl Fn(Verdict) -> bool) -> Vec<usize> {
        self.entries.iter().filter(|e| f(e.verdict)).map(|e| e.id).collect()
    }

    /// `id,assigned,l,gamma,verdict,truly_flipped`; the last column is empty
    /// when no flip mask (indexed by instance id) is given.
    pub fn to_csv(&self, flipped: Option<&[bool]>) -> String {
        let mut out = String::from("id,assigned,l,gamma,verdict,truly_flipped\n");
        for e in &self.entries {
            let truth = flipped
                .and_then(|f| f.get(e.id))
                .map_or(String::new(), |&f| u8::from(f).to_string());
            let _ = writeln!(
                out,
                "{},{},{:.12},{:.12},{},{truth}",
                e.id,
                e.assigned,
                e.score,
                e.gamma,
                e.verdict.as_str()
            );
        }
        out
    }
}

fn hinge_part(prior: &Matrix, posterior: &Matrix, k: usize) -> Result<f64> {
    if prior.rows() != posterior.rows() || prior.cols() != posterior.cols() {
        return Err(Error::DimensionMismatch {
            expected: prior.rows() * prior.cols(),
            got: posterior.rows() * posterior.cols(),
        });
    }
    let kl: Vec<f64> = (0..prior.rows())
        .map(|j| kl_divergence(posterior.row(j), prior.row(j)))
        .collect();
    Ok(kl.iter().map(|&kj| (kl[k] - kj).max(0.0)).sum())
}

/// Hinge-summed KL gap between the assigned class `k` and every class.
///
/// The data part is averaged over the `n` data classes; the attribute part
/// sums the same hinge over the data classes and divides by the number of
/// attribute classes `m`. A part absent from the posterior is left out.
pub fn dissimilarity(prior: &Conditionals, posterior: &PosteriorConditionals, k: usize) -> Result<f64> {
    let n = prior.data_rows.rows();
    if k >= n {
        return Err(Error::InvalidLabel { label: k, n_classes: n });
    }
    let mut l = 0.0;
    if let Some(post) = &posterior.data_rows {
        l += hinge_part(&prior.data_rows, post, k)? / n as f64;
    }
    if let Some(post) = &posterior.attr_rows {
        let pa = prior
            .attr_rows
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("posterior has an attribute part the prior lacks".into()))?;
        l += hinge_part(pa, post, k)? / pa.cols() as f64;
    }
    Ok(l)
}

/// `1 - l / max(l)`; every weight is one when all scores are zero.
pub fn batch_weights(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "score {s} is not a finite non-negative number"
        )));
    }
    let max = scores.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(vec![1.0; scores.len()]);
    }
    Ok(scores.iter().map(|s| 1.0 - s / max).collect())
}

/// Dissimilarity of each queried instance under its assigned label, or
/// `None` for an instance without context. Scored in parallel; the result
/// does not depend on scheduling.
pub fn score_batch<C: Classifier + ?Sized>(
    queried: &[usize],
    assigned: &[usize],
    dataset: &Dataset,
    classifier: &C,
    relationship: &RelationshipModel,
) -> Result<Vec<Option<f64>>> {
    if queried.is_empty() {
        return Err(Error::Empty("query set"));
    }
    if queried.len() != assigned.len() {
        return Err(Error::DimensionMismatch {
            expected: queried.len(),
            got: assigned.len(),
        });
    }
    let prior = prior_conditionals(relationship);
    queried
        .par_iter()
        .zip(assigned.par_iter())
        .map(
            |(&id, &k)| match build_instance_graph(dataset, id, classifier, relationship) {
                Ok(graph) => dissimilarity(&prior, &posterior_conditionals(&graph)?, k).map(Some),
                Err(Error::NoContext { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect()
}

fn entries(queried: &[usize], assigned: &[usize], scores: &[Option<f64>]) -> Result<(Vec<DetectionEntry>, f64)> {
    let flat: Vec<f64> = scores.iter().map(|s| s.unwrap_or(0.0)).collect();
    let gamma = batch_weights(&flat)?;
    let max_score = flat.iter().cloned().fold(0.0, f64::max);
    let entries = (0..queried.len())
        .map(|i| DetectionEntry {
            id: queried[i],
            assigned: assigned[i],
            score: flat[i],
            gamma: gamma[i],
            verdict: if scores[i].is_some() {
                Verdict::Keep
            } else {
                Verdict::Unfilterable
            },
        })
        .collect();
    Ok((entries, max_score))
}

/// Turns scores into a thresholded result: scored instances with
/// `gamma <= beta` are removed.
pub fn threshold_verdicts(
    queried: &[usize],
    assigned: &[usize],
    scores: &[Option<f64>],
    beta: f64,
) -> Result<DetectionResult> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("beta {beta} outside [0, 1)")));
    }
    let (mut entries, max_score) = entries(queried, assigned, scores)?;
    for e in &mut entries {
        if e.verdict == Verdict::Keep && e.gamma <= beta {
            e.verdict = Verdict::Remove;
        }
    }
    Ok(DetectionResult {
        entries,
        max_score,
        beta: Some(beta),
    })
}

/// Removes exactly `count` instances: highest scores first, ties to the
/// lower id, instances without context last.
pub fn topk_verdicts(
    queried: &[usize],
    assigned: &[usize],
    scores: &[Option<f64>],
    count: usize,
) -> Result<DetectionResult> {
    if count > queried.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot remove {count} of {} instances",
            queried.len()
        )));
    }
    let (mut entries, max_score) = entries(queried, assigned, scores)?;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| {
        let score = |i: usize| entries[i].score;
        scores[a]
            .is_none()
            .cmp(&scores[b].is_none())
            .then(score(b).total_cmp(&score(a)))
            .then(queried[a].cmp(&queried[b]))
    });
    for &i in &order[..count] {
        entries[i].verdict = Verdict::Remove;
    }
    Ok(DetectionResult {
        entries,
        max_score,
        beta: None,
    })
}

/// Scores the batch and keeps instances whose weight exceeds `beta`.
pub fn cnld_detect<C: Classifier + ?Sized>(
    queried: &[usize],
    assigned: &[usize],
    dataset: &Dataset,
    classifier: &C,
    relationship: &RelationshipModel,
    beta: f64,
) -> Result<DetectionResult> {
    let scores = score_batch(queried, assigned, dataset, classifier, relationship)?;
    threshold_verdicts(queried, assigned, &scores, beta)
}

/// Scores the batch and removes the `count` most dissimilar instances.
pub fn detect_topk<C: Classifier + ?Sized>(
    queried: &[usize],
    assigned: &[usize],
    dataset: &Dataset,
    classifier: &C,
    relationship: &RelationshipModel,
    count: usize,
) -> Result<DetectionResult> {
    let scores = score_batch(queried, assigned, dataset, classifier, relationship)?;
    topk_verdicts(queried, assigned, &scores, count)
}
