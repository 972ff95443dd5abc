//! Detection error rates and classification accuracy.

use serde::Serialize;

use crate::classifier::Classifier;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionMetrics {
    /// Correct labels removed over all correct labels.
    pub er1: Option<f64>,
    /// Wrong labels kept over all wrong labels.
    pub er2: Option<f64>,
    /// Wrong labels among the removed ones.
    pub nep: Option<f64>,
    pub correct_removed: usize,
    pub mislabeled_kept: usize,
    pub mislabeled_removed: usize,
    pub removed: usize,
    pub correct_total: usize,
    pub mislabeled_total: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `removed` holds instance positions into `flipped`; duplicates count once.
pub fn detection_metrics(removed: &[usize], flipped: &[bool]) -> Result<DetectionMetrics> {
    let mut is_removed = vec![false; flipped.len()];
    for &i in removed {
        *is_removed.get_mut(i).ok_or(Error::IndexOutOfRange(i))? = true;
    }
    let mut m = DetectionMetrics {
        er1: None,
        er2: None,
        nep: None,
        correct_removed: 0,
        mislabeled_kept: 0,
        mislabeled_removed: 0,
        removed: 0,
        correct_total: 0,
        mislabeled_total: 0,
    };
    for (&f, &r) in flipped.iter().zip(&is_removed) {
        match (f, r) {
            (true, true) => m.mislabeled_removed += 1,
            (true, false) => m.mislabeled_kept += 1,
            (false, true) => m.correct_removed += 1,
            (false, false) => {}
        }
        m.removed += usize::from(r);
        m.mislabeled_total += usize::from(f);
    }
    m.correct_total = flipped.len() - m.mislabeled_total;
    m.er1 = ratio(m.correct_removed, m.correct_total);
    m.er2 = ratio(m.mislabeled_kept, m.mislabeled_total);
    m.nep = ratio(m.mislabeled_removed, m.removed);
    Ok(m)
}

/// Fraction of `ids` whose arg-max prediction equals the true label.
pub fn accuracy<C: Classifier + ?Sized>(classifier: &C, dataset: &Dataset, ids: &[usize]) -> Result<f64> {
    if ids.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut hits = 0usize;
    for &id in ids {
        let inst = dataset.instance(id)?;
        hits += usize::from(classifier.predict(&inst.features)? == inst.true_label);
    }
    Ok(hits as f64 / ids.len() as f64)
}

/// Probability that a random positive outranks a random negative, ties
/// counted as one half. `None` when either group is empty.
pub fn ranking_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    // Mid-ranks over runs of equal scores.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| positive[k]).count() as f64 * mid;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}
