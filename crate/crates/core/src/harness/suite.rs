//! Fixed-count detection comparison on a noisy evaluation split.
//!
//! Models are trained on the first batch of the training set; the test
//! labels are corrupted and every detector removes the same number of
//! instances.

use std::fmt;

use serde::Serialize;

use super::config::{ExperimentConfig, NoiseModel};
use super::data::{fold_count, load_dataset, split, Prepared};
use crate::baselines::{consensus_detect, majority_detect, probabilistic_detect};
use crate::classifier::train_aux;
use crate::dataset::split_batches;
use crate::detector::{score_batch, topk_verdicts};
use crate::error::{Error, Result};
use crate::metrics::{detection_metrics, ranking_auc, DetectionMetrics};
use crate::noise::{estimate_transition, inject_nar, inject_ncar, NoisePlan};
use crate::relationship::build_relationship;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Cnld,
    Probabilistic,
    Consensus,
    Majority,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cnld, Method::Probabilistic, Method::Consensus, Method::Majority];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cnld => "CNLD",
            Method::Probabilistic => "probabilistic",
            Method::Consensus => "consensus",
            Method::Majority => "majority",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub seed: u64,
    pub fold: usize,
    pub method: Method,
    /// Requested rate for NCAR, realized flip fraction for NAR.
    pub omega: f64,
    pub metrics: DetectionMetrics,
    /// Flip-ranking AUC of the method's scores; CNLD only.
    pub auc: Option<f64>,
}

/// Every fold (CORA) or the single split, for each noise rate and method.
pub fn run_detection_suite(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<SuiteRow>> {
    let dataset = load_dataset(cfg, seed)?;
    let mut rows = Vec::new();
    for fold in 0..fold_count(cfg) {
        let prep = split(cfg, dataset.clone(), seed, fold);
        rows.extend(run_fold(cfg, &prep, seed)?);
    }
    Ok(rows)
}

fn run_fold(cfg: &ExperimentConfig, prep: &Prepared, seed: u64) -> Result<Vec<SuiteRow>> {
    let ds = &prep.dataset;
    let n = ds.n_classes();
    let fold_seed = derive_seed(seed, "fold", prep.fold as u64);
    let plan = split_batches(ds, &prep.train, cfg.suite_batches, derive_seed(fold_seed, "batches", 0))?;
    let initial = plan.initial();
    let truth_of = |ids: &[usize]| -> Vec<usize> { ids.iter().map(|&i| ds.instances()[i].true_label).collect() };

    let init_features: Vec<&[f64]> = initial.iter().map(|&i| ds.features(i)).collect();
    let ensemble = train_aux(
        &init_features,
        &truth_of(initial),
        n,
        &cfg.aux_config(derive_seed(fold_seed, "mlr", 0)),
    )?;
    let mut labels = vec![None; ds.len()];
    for &i in initial {
        labels[i] = Some(ds.instances()[i].true_label);
    }
    let relationship = build_relationship(ds, initial, &labels, &cfg.relationship)?;

    let test = &prep.test;
    let truth = truth_of(test);
    let noise_plans: Vec<(NoisePlan, usize)> = match cfg.noise {
        NoiseModel::Ncar => cfg
            .omegas
            .iter()
            .enumerate()
            .map(|(k, &omega)| {
                let plan = inject_ncar(&truth, n, omega, derive_seed(fold_seed, "suite-noise", k as u64))?;
                let count = ((omega * test.len() as f64).round() as usize).min(test.len());
                Ok((plan, count))
            })
            .collect::<Result<_>>()?,
        NoiseModel::Nar => {
            let features: Vec<&[f64]> = prep.train.iter().map(|&i| ds.features(i)).collect();
            let transition = estimate_transition(&features, &truth_of(&prep.train), n)?;
            let plan = inject_nar(&truth, &transition, derive_seed(fold_seed, "suite-noise", 0))?;
            let count = plan.flip_count();
            vec![(plan, count)]
        }
    };

    let mut position = vec![usize::MAX; ds.len()];
    for (p, &id) in test.iter().enumerate() {
        position[id] = p;
    }
    let to_positions = |ids: &[usize]| -> Vec<usize> { ids.iter().map(|&id| position[id]).collect() };

    let mut rows = Vec::new();
    for (plan, count) in noise_plans {
        let assigned = &plan.assigned;
        let scores = score_batch(test, assigned, ds, &ensemble.mlr, &relationship)?;
        let flat: Vec<f64> = scores.iter().map(|s| s.unwrap_or(0.0)).collect();
        let auc = ranking_auc(&flat, &plan.flipped);
        for method in Method::ALL {
            let removed = match method {
                Method::Cnld => topk_verdicts(test, assigned, &scores, count)?.removed(),
                Method::Probabilistic => probabilistic_detect(&ensemble.mlr, ds, test, assigned, count)?,
                Method::Consensus => consensus_detect(&ensemble, ds, test, assigned, count)?,
                Method::Majority => majority_detect(&ensemble, ds, test, assigned, count)?,
            };
            let metrics = detection_metrics(&to_positions(&removed), &plan.flipped)?;
            if metrics.removed != count {
                return Err(Error::InvalidParameter(format!(
                    "{method} removed {} instead of {count}",
                    metrics.removed
                )));
            }
            rows.push(SuiteRow {
                seed,
                fold: prep.fold,
                method,
                omega: plan.omega,
                metrics,
                auc: (method == Method::Cnld).then_some(auc).flatten(),
            });
        }
    }
    Ok(rows)
}
