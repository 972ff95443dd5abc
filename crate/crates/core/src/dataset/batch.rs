use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Sequential batches of training indices. Batch 0 is the initial,
/// correctly labeled pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub batches: Vec<Vec<usize>>,
}

impl BatchPlan {
    pub fn initial(&self) -> &[usize] {
        &self.batches[0]
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }
}

/// Shuffles `indices`, splits them into `n_batches` equal parts (the last
/// absorbing the remainder) and swaps instances into batch 0 until it holds
/// at least one instance of every class.
pub fn split_batches(dataset: &Dataset, indices: &[usize], n_batches: usize, seed: u64) -> Result<BatchPlan> {
    if n_batches < 2 {
        return Err(Error::InvalidParameter("n_batches must be at least 2".into()));
    }
    if indices.len() < n_batches {
        return Err(Error::InvalidParameter(format!(
            "{} indices cannot fill {n_batches} batches",
            indices.len()
        )));
    }
    let n = dataset.n_classes();
    let label = |i: usize| dataset.instances()[i].true_label;
    for &i in indices {
        dataset.instance(i)?;
    }
    let mut present = vec![false; n];
    indices.iter().for_each(|&i| present[label(i)] = true);
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(Error::MissingClass(missing));
    }

    let mut order = indices.to_vec();
    order.shuffle(&mut seeded(seed));
    let size = order.len() / n_batches;
    let mut batches: Vec<Vec<usize>> = (0..n_batches)
        .map(|b| {
            let end = if b + 1 == n_batches {
                order.len()
            } else {
                (b + 1) * size
            };
            order[b * size..end].to_vec()
        })
        .collect();

    if batches[0].len() < n {
        return Err(Error::InvalidParameter(format!(
            "initial batch of {} instances cannot cover {n} classes",
            batches[0].len()
        )));
    }
    let mut counts = vec![0usize; n];
    batches[0].iter().for_each(|&i| counts[label(i)] += 1);
    for class in 0..n {
        if counts[class] > 0 {
            continue;
        }
        let (b, pos) = batches
            .iter()
            .enumerate()
            .skip(1)
            .find_map(|(b, batch)| batch.iter().position(|&i| label(i) == class).map(|p| (b, p)))
            .ok_or(Error::MissingClass(class))?;
        let slot = batches[0]
            .iter()
            .position(|&i| counts[label(i)] > 1)
            .ok_or(Error::MissingClass(class))?;
        counts[label(batches[0][slot])] -= 1;
        counts[class] += 1;
        let incoming = batches[b][pos];
        batches[b][pos] = batches[0][slot];
        batches[0][slot] = incoming;
    }
    Ok(BatchPlan { batches })
}
