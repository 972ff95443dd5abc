//! Classifier-only noisy label detectors used for comparison.
//!
//! Voting detectors flag an instance when enough ensemble members disagree
//! with its assigned label. The probabilistic detector flags a mismatch
//! between the assigned label and the logistic regression prediction and
//! grades matched labels by prediction entropy. All three rank flagged
//! instances first and remove a fixed number from the top.

use crate::classifier::{aux_predictions, AuxEnsemble, Classifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::prob::{argmax, entropy};

/// Scaling of the normalized entropy for matched labels, which keeps every
/// matched score at or below the smallest possible mismatch score.
pub const MATCHED_ENTROPY_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineScore {
    pub id: usize,
    /// One flag per classifier consulted: its prediction differs from the
    /// assigned label.
    pub disagree: Vec<bool>,
    pub flagged: bool,
    /// Suspicion within the flagged and unflagged groups; higher is removed first.
    pub score: f64,
    pub rank: usize,
}

/// Orders flagged before unflagged, then by descending score, then by id,
/// and fills in ranks.
fn ranked(mut scores: Vec<BaselineScore>) -> Vec<BaselineScore> {
    scores.sort_by(|a, b| {
        b.flagged
            .cmp(&a.flagged)
            .then(b.score.total_cmp(&a.score))
            .then(a.id.cmp(&b.id))
    });
    for (rank, s) in scores.iter_mut().enumerate() {
        s.rank = rank;
    }
    scores
}

fn check_lengths(ids: &[usize], other: usize) -> Result<()> {
    if ids.len() != other {
        return Err(Error::DimensionMismatch {
            expected: ids.len(),
            got: other,
        });
    }
    Ok(())
}

/// Voting scores from member predictions (MLR, SVM, kNN) and the MLR
/// probability of the assigned class. An instance is flagged when at least
/// `required` members disagree; the suspicion score is `1 - p(assigned)`.
pub fn voting_scores(
    ids: &[usize],
    assigned: &[usize],
    predictions: &[[usize; 3]],
    p_assigned: &[f64],
    required: usize,
) -> Result<Vec<BaselineScore>> {
    check_lengths(ids, assigned.len())?;
    check_lengths(ids, predictions.len())?;
    check_lengths(ids, p_assigned.len())?;
    let scores = (0..ids.len())
        .map(|i| {
            let disagree: Vec<bool> = predictions[i].iter().map(|&p| p != assigned[i]).collect();
            let votes = disagree.iter().filter(|&&d| d).count();
            BaselineScore {
                id: ids[i],
                disagree,
                flagged: votes >= required,
                score: 1.0 - p_assigned[i],
                rank: 0,
            }
        })
        .collect();
    Ok(ranked(scores))
}

/// Probabilistic scores from predicted distributions: `1 - p(assigned)` on a
/// mismatch, otherwise the normalized entropy times [`MATCHED_ENTROPY_WEIGHT`].
pub fn probabilistic_scores(ids: &[usize], assigned: &[usize], probas: &[Vec<f64>]) -> Result<Vec<BaselineScore>> {
    check_lengths(ids, assigned.len())?;
    check_lengths(ids, probas.len())?;
    let mut scores = Vec::with_capacity(ids.len());
    for i in 0..ids.len() {
        let p = &probas[i];
        let n = p.len();
        if assigned[i] >= n {
            return Err(Error::InvalidLabel {
                label: assigned[i],
                n_classes: n,
            });
        }
        let mismatch = argmax(p) != assigned[i];
        let score = if mismatch {
            1.0 - p[assigned[i]]
        } else if n > 1 {
            MATCHED_ENTROPY_WEIGHT * entropy(p) / (n as f64).ln()
        } else {
            0.0
        };
        scores.push(BaselineScore {
            id: ids[i],
            disagree: vec![mismatch],
            flagged: mismatch,
            score,
            rank: 0,
        });
    }
    Ok(ranked(scores))
}

/// Ids of the first `count` ranked instances.
pub fn top_removed(scores: &[BaselineScore], count: usize) -> Result<Vec<usize>> {
    if count > scores.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot remove {count} of {} instances",
            scores.len()
        )));
    }
    Ok(scores[..count].iter().map(|s| s.id).collect())
}

fn ensemble_scores(
    ensemble: &AuxEnsemble,
    dataset: &Dataset,
    ids: &[usize],
    assigned: &[usize],
    required: usize,
) -> Result<Vec<BaselineScore>> {
    check_lengths(ids, assigned.len())?;
    let mut predictions = Vec::with_capacity(ids.len());
    let mut p_assigned = Vec::with_capacity(ids.len());
    for (&id, &a) in ids.iter().zip(assigned) {
        dataset.instance(id)?;
        let x = dataset.features(id);
        predictions.push(aux_predictions(ensemble, x)?);
        let p = ensemble.mlr.predict_proba(x)?;
        p_assigned.push(*p.get(a).ok_or(Error::InvalidLabel {
            label: a,
            n_classes: p.len(),
        })?);
    }
    voting_scores(ids, assigned, &predictions, &p_assigned, required)
}

/// Flags instances where at least two of three members disagree.
pub fn majority_detect(
    ensemble: &AuxEnsemble,
    dataset: &Dataset,
    ids: &[usize],
    assigned: &[usize],
    count: usize,
) -> Result<Vec<usize>> {
    top_removed(&ensemble_scores(ensemble, dataset, ids, assigned, 2)?, count)
}

/// Flags instances where all three members disagree.
pub fn consensus_detect(
    ensemble: &AuxEnsemble,
    dataset: &Dataset,
    ids: &[usize],
    assigned: &[usize],
    count: usize,
) -> Result<Vec<usize>> {
    top_removed(&ensemble_scores(ensemble, dataset, ids, assigned, 3)?, count)
}

pub fn probabilistic_detect<C: Classifier + ?Sized>(
    classifier: &C,
    dataset: &Dataset,
    ids: &[usize],
    assigned: &[usize],
    count: usize,
) -> Result<Vec<usize>> {
    let probas = ids
        .iter()
        .map(|&id| {
            dataset.instance(id)?;
            classifier.predict_proba(dataset.features(id))
        })
        .collect::<Result<Vec<_>>>()?;
    top_removed(&probabilistic_scores(ids, assigned, &probas)?, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agreement_is_not_flagged_and_two_votes_are() {
        let s = voting_scores(&[0, 1], &[2, 2], &[[2, 2, 2], [0, 1, 2]], &[0.9, 0.4], 2).unwrap();
        let by_id = |id| s.iter().find(|x| x.id == id).unwrap();
        assert!(!by_id(0).flagged);
        assert!(by_id(1).flagged);
        assert_eq!(by_id(1).disagree, vec![true, true, false]);
        let c = voting_scores(&[0, 1], &[2, 2], &[[2, 2, 2], [0, 1, 2]], &[0.9, 0.4], 3).unwrap();
        assert!(c.iter().all(|x| !x.flagged));
    }

    #[test]
    fn flagged_instances_ranked_by_assigned_probability() {
        // Five flagged with these MLR probabilities; one unflagged with the lowest.
        let ids = [10, 11, 12, 13, 14, 15];
        let p = [0.30, 0.05, 0.20, 0.40, 0.10, 0.01];
        let mut preds = [[1, 1, 1]; 6];
        preds[5] = [0, 0, 0];
        let s = voting_scores(&ids, &[0; 6], &preds, &p, 2).unwrap();
        assert_eq!(top_removed(&s, 3).unwrap(), vec![11, 14, 12]);
        assert_eq!(s.last().unwrap().id, 15);
        let ranks: Vec<usize> = s.iter().map(|x| x.rank).collect();
        assert_eq!(ranks, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn probabilistic_rule() {
        let probas = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.1, 0.9, 0.0],
            vec![0.3, 0.7, 0.0],
            vec![0.5, 0.3, 0.2],
        ];
        let s = probabilistic_scores(&[0, 1, 2, 3], &[0, 0, 0, 0], &probas).unwrap();
        let by_id = |id| s.iter().find(|x| x.id == id).unwrap().clone();
        assert_eq!(by_id(0).score, 0.0);
        assert!((by_id(1).score - 0.9).abs() < 1e-15);
        let h = -(0.5f64 * 0.5f64.ln() + 0.3 * 0.3f64.ln() + 0.2 * 0.2f64.ln());
        assert!((by_id(3).score - 0.5 * h / 3f64.ln()).abs() < 1e-15);
        assert_eq!(top_removed(&s, 4).unwrap(), vec![1, 2, 3, 0]);
    }

    #[test]
    fn consensus_flags_subset_of_majority() {
        let preds = [[0, 1, 2], [1, 1, 1], [0, 0, 1], [2, 1, 0], [1, 2, 2]];
        let ids = [0, 1, 2, 3, 4];
        let assigned = [0, 0, 0, 0, 0];
        let p = [0.5; 5];
        let maj = voting_scores(&ids, &assigned, &preds, &p, 2).unwrap();
        let con = voting_scores(&ids, &assigned, &preds, &p, 3).unwrap();
        for c in con.iter().filter(|x| x.flagged) {
            assert!(maj.iter().any(|m| m.id == c.id && m.flagged));
        }
    }

    #[test]
    fn removal_count_bounded() {
        let s = probabilistic_scores(&[0], &[0], &[vec![0.5, 0.5]]).unwrap();
        assert!(top_removed(&s, 2).is_err());
        assert!(top_removed(&s, 0).unwrap().is_empty());
    }
}
