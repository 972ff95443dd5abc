use rand::seq::SliceRandom;

use super::config::{DatasetSpec, ExperimentConfig};
use crate::dataset::{generate_synthetic, load_cora, read_dataset, Dataset};
use crate::error::Result;
use crate::rng::{derive_seed, seeded};

/// A loaded dataset with its train/test partition for one run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub fold: usize,
}

pub fn load_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    match &cfg.dataset {
        DatasetSpec::Synthetic { config, fixed_seed } => {
            let mut c = config.clone();
            c.seed = fixed_seed.unwrap_or(seed);
            Ok(generate_synthetic(&c)?.0)
        }
        DatasetSpec::Cora { content, cites } => load_cora(content, cites),
        DatasetSpec::File(path) => Ok(read_dataset(&std::fs::read_to_string(path)?, path)?.0),
    }
}

/// Number of folds a run can use: `cv_folds` for CORA, one fixed split otherwise.
pub fn fold_count(cfg: &ExperimentConfig) -> usize {
    match cfg.dataset {
        DatasetSpec::Cora { .. } => cfg.cv_folds,
        _ => 1,
    }
}

/// CORA: fold `fold` of a fixed `cv_folds` partition is the test set.
/// Otherwise a shuffled split per seed holding out `test_fraction`.
pub fn split(cfg: &ExperimentConfig, dataset: Dataset, seed: u64, fold: usize) -> Prepared {
    let n = dataset.len();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    if let DatasetSpec::Cora { .. } = cfg.dataset {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seeded(derive_seed(0, "folds", 0)));
        for (pos, id) in order.into_iter().enumerate() {
            if pos % cfg.cv_folds == fold % cfg.cv_folds {
                test.push(id);
            } else {
                train.push(id);
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seeded(derive_seed(seed, "split", 0)));
        let n_test = ((cfg.test_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1));
        test = order[..n_test].to_vec();
        train = order[n_test..].to_vec();
    }
    train.sort_unstable();
    test.sort_unstable();
    Prepared {
        dataset,
        train,
        test,
        fold,
    }
}

/// Dataset and split for a run seed; CORA uses fold `seed % cv_folds`.
pub fn prepare(cfg: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    let fold = (seed % fold_count(cfg) as u64) as usize;
    Ok(split(cfg, load_dataset(cfg, seed)?, seed, fold))
}
