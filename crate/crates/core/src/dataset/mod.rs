//! Datasets with known ground truth: feature vectors, link structure and
//! attribute observations.

mod batch;
mod cora;
mod synthetic;
mod text;

pub use batch::{split_batches, BatchPlan};
pub use cora::{load_cora, parse_cora, write_cora};
pub use synthetic::{generate_synthetic, GroundTruth, SyntheticConfig, ATTRIBUTE_SMOOTHING};
pub use text::{read_dataset, write_dataset};

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::prob::is_distribution;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Position of the instance inside its dataset.
    pub id: usize,
    pub features: Vec<f64>,
    pub true_label: usize,
    pub assigned_label: Option<usize>,
    /// One distribution over the attribute classes per observed attribute.
    pub attribute_obs: Vec<Vec<f64>>,
    /// Linked instances, sorted, without duplicates or self links.
    pub link_ids: Vec<usize>,
}

/// The raw pieces a [`Dataset`] is assembled from.
#[derive(Debug, Clone, Default)]
pub struct DatasetParts {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub attribute_obs: Vec<Vec<Vec<f64>>>,
    /// Links as recorded by the source, possibly directed or repeated.
    pub edges: Vec<(usize, usize)>,
    pub n_classes: usize,
    pub m_attribute_classes: usize,
    pub class_names: Vec<String>,
    /// Identifiers from the source files; defaults to the position.
    pub source_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instances: Vec<Instance>,
    n_classes: usize,
    m_attribute_classes: usize,
    feature_dim: usize,
    class_names: Vec<String>,
    source_ids: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl Dataset {
    /// Validates the parts and derives the symmetric adjacency from `edges`.
    pub fn from_parts(parts: DatasetParts) -> Result<Self> {
        let DatasetParts {
            features,
            labels,
            mut attribute_obs,
            edges,
            n_classes,
            m_attribute_classes,
            mut class_names,
            mut source_ids,
        } = parts;
        let count = features.len();
        if labels.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                got: labels.len(),
            });
        }
        if n_classes == 0 {
            return Err(Error::InvalidDataset("at least one class is required".into()));
        }
        if attribute_obs.is_empty() {
            attribute_obs = vec![Vec::new(); count];
        } else if attribute_obs.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                got: attribute_obs.len(),
            });
        }
        if class_names.is_empty() {
            class_names = (0..n_classes).map(|c| format!("c{c}")).collect();
        } else if class_names.len() != n_classes {
            return Err(Error::DimensionMismatch {
                expected: n_classes,
                got: class_names.len(),
            });
        }
        if source_ids.is_empty() {
            source_ids = (0..count).map(|i| i.to_string()).collect();
        } else if source_ids.len() != count {
            return Err(Error::DimensionMismatch {
                expected: count,
                got: source_ids.len(),
            });
        }

        let feature_dim = features.first().map_or(0, Vec::len);
        let mut adjacency = vec![BTreeSet::new(); count];
        for &(a, b) in &edges {
            if a >= count {
                return Err(Error::IndexOutOfRange(a));
            }
            if b >= count {
                return Err(Error::IndexOutOfRange(b));
            }
            if a != b {
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
        }

        let mut instances = Vec::with_capacity(count);
        for (id, ((features, true_label), (obs, links))) in features
            .into_iter()
            .zip(labels)
            .zip(attribute_obs.into_iter().zip(adjacency))
            .enumerate()
        {
            if features.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    got: features.len(),
                });
            }
            if true_label >= n_classes {
                return Err(Error::InvalidLabel {
                    label: true_label,
                    n_classes,
                });
            }
            for o in &obs {
                if o.len() != m_attribute_classes {
                    return Err(Error::DimensionMismatch {
                        expected: m_attribute_classes,
                        got: o.len(),
                    });
                }
                if !is_distribution(o, 1e-9) {
                    return Err(Error::InvalidDataset(format!(
                        "attribute observation of instance {id} is not a distribution"
                    )));
                }
            }
            instances.push(Instance {
                id,
                features,
                true_label,
                assigned_label: None,
                attribute_obs: obs,
                link_ids: links.into_iter().collect(),
            });
        }

        Ok(Self {
            instances,
            n_classes,
            m_attribute_classes,
            feature_dim,
            class_names,
            source_ids,
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn m_attribute_classes(&self) -> usize {
        self.m_attribute_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn source_ids(&self) -> &[String] {
        &self.source_ids
    }

    /// Links exactly as recorded by the source.
    pub fn raw_edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn instance(&self, id: usize) -> Result<&Instance> {
        self.instances.get(id).ok_or(Error::IndexOutOfRange(id))
    }

    pub fn features(&self, id: usize) -> &[f64] {
        &self.instances[id].features
    }

    pub fn true_labels(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.true_label).collect()
    }

    /// Unique undirected links `(a, b)` with `a < b`, sorted.
    pub fn undirected_links(&self) -> Vec<(usize, usize)> {
        self.instances
            .iter()
            .flat_map(|inst| {
                inst.link_ids
                    .iter()
                    .filter(move |&&b| b > inst.id)
                    .map(move |&b| (inst.id, b))
            })
            .collect()
    }

    /// Number of instances per true class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for inst in &self.instances {
            counts[inst.true_label] += 1;
        }
        counts
    }

    pub fn with_assigned_labels(mut self, assigned: &[Option<usize>]) -> Result<Self> {
        if assigned.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: assigned.len(),
            });
        }
        for (inst, &a) in self.instances.iter_mut().zip(assigned) {
            if let Some(label) = a {
                if label >= self.n_classes {
                    return Err(Error::InvalidLabel {
                        label,
                        n_classes: self.n_classes,
                    });
                }
            }
            inst.assigned_label = a;
        }
        Ok(self)
    }
}
