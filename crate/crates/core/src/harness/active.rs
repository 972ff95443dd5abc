//! Batch-incremental learning runs.
//!
//! Batch 0 is correctly labeled and seeds the classifier and relationship
//! model. Every later batch is queried, annotated, filtered according to
//! the mode and folded into both models before the test set is scored.

use rand::seq::SliceRandom;
use serde::Serialize;

use super::config::{ExperimentConfig, Mode, NoiseModel, Selection};
use super::data::{prepare, Prepared};
use crate::baselines::probabilistic_detect;
use crate::classifier::{train_mlr, Classifier, MlrConfig, MlrModel};
use crate::dataset::{split_batches, Dataset};
use crate::detector::cnld_detect;
use crate::error::{Error, Result};
use crate::metrics::{accuracy, detection_metrics, DetectionMetrics};
use crate::noise::{estimate_transition, inject_nar, inject_ncar, NoisePlan, TransitionMatrix};
use crate::prob::entropy;
use crate::relationship::{build_relationship, RelationshipModel};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchLog {
    pub batch: usize,
    /// Test accuracy after the batch was folded in.
    pub accuracy: f64,
    /// Present when a filter ran on the batch.
    pub metrics: Option<DetectionMetrics>,
    pub removed: usize,
    pub kept: usize,
    /// Instances sent to the annotator, in selection order.
    pub queried: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentLog {
    pub run_id: String,
    pub seed: u64,
    pub mode: Mode,
    pub omega: f64,
    pub config_hash: String,
    pub batches: Vec<BatchLog>,
}

impl ExperimentLog {
    pub fn final_accuracy(&self) -> f64 {
        self.batches.last().map_or(f64::NAN, |b| b.accuracy)
    }
}

pub fn run_id(cfg: &ExperimentConfig, label: &str, seed: u64) -> String {
    format!("{}-{label}-s{seed}", cfg.hash())
}

/// The `k` most uncertain candidates (ties to the lower id), or `k` drawn
/// uniformly without replacement.
pub fn select_informative<C: Classifier + ?Sized>(
    classifier: &C,
    dataset: &Dataset,
    candidates: &[usize],
    k: usize,
    strategy: Selection,
    seed: u64,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter("query size must be positive".into()));
    }
    if k > candidates.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot query {k} of {} candidates",
            candidates.len()
        )));
    }
    match strategy {
        Selection::Entropy => {
            let mut scored = candidates
                .iter()
                .map(|&id| {
                    dataset.instance(id)?;
                    Ok((id, entropy(&classifier.predict_proba(dataset.features(id))?)))
                })
                .collect::<Result<Vec<_>>>()?;
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            Ok(scored.into_iter().take(k).map(|(id, _)| id).collect())
        }
        Selection::Random => {
            let mut pool = candidates.to_vec();
            pool.sort_unstable();
            let (chosen, _) = pool.partial_shuffle(&mut seeded(seed), k);
            Ok(chosen.to_vec())
        }
    }
}

/// Classifier and relationship model plus every accepted label so far.
struct Learner<'a> {
    cfg: &'a ExperimentConfig,
    dataset: &'a Dataset,
    seed: u64,
    model: MlrModel,
    relationship: RelationshipModel,
    labels: Vec<Option<usize>>,
    accepted: Vec<usize>,
}

impl<'a> Learner<'a> {
    fn new(cfg: &'a ExperimentConfig, dataset: &'a Dataset, initial: &[usize], seed: u64) -> Result<Self> {
        let mut labels = vec![None; dataset.len()];
        for &id in initial {
            labels[id] = Some(dataset.instances()[id].true_label);
        }
        let relationship = build_relationship(dataset, initial, &labels, &cfg.relationship)?;
        let mut learner = Self {
            cfg,
            dataset,
            seed,
            model: MlrModel::zeros(dataset.n_classes(), dataset.feature_dim()),
            relationship,
            labels,
            accepted: initial.to_vec(),
        };
        learner.model = learner.fit(
            None,
            initial,
            MlrConfig {
                seed: derive_seed(seed, "mlr", 0),
                ..cfg.mlr.clone()
            },
        )?;
        Ok(learner)
    }

    fn fit(&self, init: Option<&MlrModel>, ids: &[usize], config: MlrConfig) -> Result<MlrModel> {
        let features: Vec<&[f64]> = ids.iter().map(|&i| self.dataset.features(i)).collect();
        let labels: Vec<usize> = ids.iter().map(|&i| self.labels[i].expect("accepted")).collect();
        train_mlr(init, &features, &labels, self.dataset.n_classes(), &config)
    }

    /// Adds `ids` with the given labels, updates the relationship counts and
    /// warm-starts the classifier on the new labels, or on everything
    /// accepted so far when replay is on.
    fn accept(&mut self, ids: &[usize], labels: &[usize], batch: usize) -> Result<()> {
        if ids.is_empty() {
            return Ok(());
        }
        for (&id, &y) in ids.iter().zip(labels) {
            self.labels[id] = Some(y);
        }
        self.accepted.extend_from_slice(ids);
        self.relationship = self.relationship.updated(self.dataset, &self.labels, ids)?;
        let config = MlrConfig {
            epochs: self.cfg.update_epochs,
            seed: derive_seed(self.seed, "mlr", batch as u64),
            ..self.cfg.mlr.clone()
        };
        let train = if self.cfg.replay { &self.accepted[..] } else { ids };
        self.model = self.fit(Some(&self.model), train, config)?;
        Ok(())
    }

    fn accuracy(&self, test: &[usize]) -> Result<f64> {
        accuracy(&self.model, self.dataset, test)
    }
}

fn query_size(cfg: &ExperimentConfig, batch_len: usize) -> usize {
    ((cfg.query_fraction * batch_len as f64).ceil() as usize).clamp(1, batch_len)
}

fn positions_of(ids: &[usize], subset: &[usize]) -> Vec<usize> {
    subset.iter().filter_map(|s| ids.iter().position(|i| i == s)).collect()
}

fn simulate_annotator(
    truth: &[usize],
    n_classes: usize,
    cfg: &ExperimentConfig,
    transition: Option<&TransitionMatrix>,
    seed: u64,
) -> Result<NoisePlan> {
    match transition {
        Some(t) => inject_nar(truth, t, seed),
        None => inject_ncar(truth, n_classes, cfg.omega, seed),
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    prep: Prepared,
    batches: Vec<Vec<usize>>,
    seed: u64,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a ExperimentConfig, seed: u64) -> Result<Self> {
        let prep = prepare(cfg, seed)?;
        let plan = split_batches(
            &prep.dataset,
            &prep.train,
            cfg.n_batches,
            derive_seed(seed, "batches", 0),
        )?;
        Ok(Self {
            cfg,
            prep,
            batches: plan.batches,
            seed,
        })
    }

    fn initial_log(&self, learner: &Learner) -> Result<BatchLog> {
        Ok(BatchLog {
            batch: 0,
            accuracy: learner.accuracy(&self.prep.test)?,
            metrics: None,
            removed: 0,
            kept: self.batches[0].len(),
            queried: Vec::new(),
        })
    }

    fn query(&self, learner: &Learner, t: usize) -> Result<Vec<usize>> {
        let cands = &self.batches[t];
        select_informative(
            &learner.model,
            &self.prep.dataset,
            cands,
            query_size(self.cfg, cands.len()),
            self.cfg.selection,
            derive_seed(self.seed, "select", t as u64),
        )
    }
}

/// Runs one of SN, PB, CL or CNLD with noisy annotation of each query.
///
/// PB and CL discard as many labels as CNLD would on the same batch; CL
/// discards known-wrong labels only, in ascending id order.
pub fn run_active_learning(cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<ExperimentLog> {
    if mode.is_pseudo() {
        return Err(Error::InvalidParameter(format!("{mode} is a pseudo-labeling mode")));
    }
    let run = Run::new(cfg, seed)?;
    let ds = &run.prep.dataset;
    let n = ds.n_classes();
    let transition = match cfg.noise {
        NoiseModel::Ncar => None,
        NoiseModel::Nar => {
            let features: Vec<&[f64]> = run.prep.train.iter().map(|&i| ds.features(i)).collect();
            let labels: Vec<usize> = run.prep.train.iter().map(|&i| ds.instances()[i].true_label).collect();
            Some(estimate_transition(&features, &labels, n)?)
        }
    };
    let mut learner = Learner::new(cfg, ds, &run.batches[0], seed)?;
    let mut logs = vec![run.initial_log(&learner)?];

    for t in 1..run.batches.len() {
        let mut step = || -> Result<BatchLog> {
            let queried = run.query(&learner, t)?;
            let truth: Vec<usize> = queried.iter().map(|&i| ds.instances()[i].true_label).collect();
            let noise = simulate_annotator(
                &truth,
                n,
                cfg,
                transition.as_ref(),
                derive_seed(seed, "noise", t as u64),
            )?;
            let assigned = &noise.assigned;
            let removed_pos: Option<Vec<usize>> = match mode {
                Mode::Sn => None,
                _ => {
                    let det = cnld_detect(&queried, assigned, ds, &learner.model, &learner.relationship, cfg.beta)?;
                    let budget = det.removed().len();
                    Some(match mode {
                        Mode::Cnld => positions_of(&queried, &det.removed()),
                        Mode::Pb => {
                            let ids = probabilistic_detect(&learner.model, ds, &queried, assigned, budget)?;
                            positions_of(&queried, &ids)
                        }
                        _ => {
                            let mut wrong: Vec<usize> = (0..queried.len()).filter(|&p| noise.flipped[p]).collect();
                            wrong.sort_by_key(|&p| queried[p]);
                            wrong.truncate(budget);
                            wrong
                        }
                    })
                }
            };
            let metrics = removed_pos
                .as_ref()
                .map(|r| detection_metrics(r, &noise.flipped))
                .transpose()?;
            let drop = removed_pos.unwrap_or_default();
            let kept: Vec<usize> = (0..queried.len()).filter(|p| !drop.contains(p)).collect();
            let ids: Vec<usize> = kept.iter().map(|&p| queried[p]).collect();
            let labels: Vec<usize> = kept.iter().map(|&p| assigned[p]).collect();
            learner.accept(&ids, &labels, t)?;
            Ok(BatchLog {
                batch: t,
                accuracy: learner.accuracy(&run.prep.test)?,
                metrics,
                removed: drop.len(),
                kept: ids.len(),
                queried,
            })
        };
        logs.push(step().map_err(Error::at_batch(t))?);
    }
    Ok(ExperimentLog {
        run_id: run_id(cfg, mode.as_str(), seed),
        seed,
        mode,
        omega: cfg.omega,
        config_hash: cfg.hash(),
        batches: logs,
    })
}

/// Runs Manual, ManualPseudo or ManualPseudoCNLD. Queried labels are
/// correct; the rest of each batch can contribute classifier predictions.
pub fn run_pseudo(cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<ExperimentLog> {
    if !mode.is_pseudo() {
        return Err(Error::InvalidParameter(format!("{mode} is not a pseudo-labeling mode")));
    }
    let run = Run::new(cfg, seed)?;
    let ds = &run.prep.dataset;
    let mut learner = Learner::new(cfg, ds, &run.batches[0], seed)?;
    let mut logs = vec![run.initial_log(&learner)?];

    for t in 1..run.batches.len() {
        let mut step = || -> Result<BatchLog> {
            let queried = run.query(&learner, t)?;
            let rest: Vec<usize> = run.batches[t]
                .iter()
                .copied()
                .filter(|i| !queried.contains(i))
                .collect();
            let mut ids = queried.clone();
            let mut labels: Vec<usize> = queried.iter().map(|&i| ds.instances()[i].true_label).collect();
            let mut metrics = None;
            let mut removed = 0;
            if mode != Mode::Manual && !rest.is_empty() {
                let pseudo = rest
                    .iter()
                    .map(|&i| learner.model.predict(ds.features(i)))
                    .collect::<Result<Vec<_>>>()?;
                let wrong: Vec<bool> = rest
                    .iter()
                    .zip(&pseudo)
                    .map(|(&i, &p)| ds.instances()[i].true_label != p)
                    .collect();
                let mut keep: Vec<usize> = (0..rest.len()).collect();
                if mode == Mode::ManualPseudoCnld {
                    let det = cnld_detect(&rest, &pseudo, ds, &learner.model, &learner.relationship, cfg.beta)?;
                    let drop = positions_of(&rest, &det.removed());
                    metrics = Some(detection_metrics(&drop, &wrong)?);
                    removed = drop.len();
                    keep.retain(|p| !drop.contains(p));
                }
                ids.extend(keep.iter().map(|&p| rest[p]));
                labels.extend(keep.iter().map(|&p| pseudo[p]));
            }
            learner.accept(&ids, &labels, t)?;
            Ok(BatchLog {
                batch: t,
                accuracy: learner.accuracy(&run.prep.test)?,
                metrics,
                removed,
                kept: ids.len(),
                queried,
            })
        };
        logs.push(step().map_err(Error::at_batch(t))?);
    }
    Ok(ExperimentLog {
        run_id: run_id(cfg, mode.as_str(), seed),
        seed,
        mode,
        omega: 0.0,
        config_hash: cfg.hash(),
        batches: logs,
    })
}
