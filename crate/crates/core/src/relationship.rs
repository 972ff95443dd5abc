//! Co-occurrence counts between data classes (`dd`, symmetric `n x n`) and
//! between data and attribute classes (`da`, `n x m`), and the smoothed
//! class-conditional distributions derived from them.
//!
//! A link between two labeled instances of classes `i != j` adds one to
//! `dd[i][j]` and one to `dd[j][i]`; a link inside class `i` adds two to
//! `dd[i][i]`, so row `i` always holds the neighbor-class counts seen from
//! class-`i` instances.

use std::collections::HashSet;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::prob::argmax;

pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RelationshipConfig {
    pub epsilon: f64,
    /// Count the arg-max attribute of each observation instead of its mass.
    pub hard_attributes: bool,
}

impl Default for RelationshipConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            hard_attributes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationshipModel {
    dd: Matrix,
    da: Option<Matrix>,
    config: RelationshipConfig,
}

/// Class-conditional distributions: row `j` of `data_rows` is `P(C^D | c_j)`,
/// row `j` of `attr_rows` is `P(C^A | c_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditionals {
    pub data_rows: Matrix,
    pub attr_rows: Option<Matrix>,
}

impl RelationshipModel {
    pub fn empty(n_classes: usize, m_attribute_classes: usize, config: RelationshipConfig) -> Result<Self> {
        if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("smoothing epsilon must be positive".into()));
        }
        Ok(Self {
            dd: Matrix::zeros(n_classes, n_classes),
            da: (m_attribute_classes > 0).then(|| Matrix::zeros(n_classes, m_attribute_classes)),
            config,
        })
    }

    pub fn from_counts(dd: Matrix, da: Option<Matrix>, config: RelationshipConfig) -> Result<Self> {
        let n = dd.rows();
        if dd.cols() != n || da.as_ref().is_some_and(|m| m.rows() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dd.cols(),
            });
        }
        let all = dd.as_slice().iter().chain(da.iter().flat_map(|m| m.as_slice()));
        if all.clone().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("counts must be finite and non-negative".into()));
        }
        if !dd.is_symmetric(0.0) {
            return Err(Error::InvalidParameter("data-data counts must be symmetric".into()));
        }
        let mut model = Self::empty(n, 0, config)?;
        model.dd = dd;
        model.da = da;
        Ok(model)
    }

    pub fn n_classes(&self) -> usize {
        self.dd.rows()
    }

    pub fn m_attribute_classes(&self) -> usize {
        self.da.as_ref().map_or(0, Matrix::cols)
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    pub fn data_counts(&self) -> &Matrix {
        &self.dd
    }

    pub fn attribute_counts(&self) -> Option<&Matrix> {
        self.da.as_ref()
    }

    /// Counts plus the smoothing constant: the edge potential between data nodes.
    pub fn data_potential(&self) -> Matrix {
        self.dd.offset(self.config.epsilon)
    }

    pub fn attribute_potential(&self) -> Option<Matrix> {
        self.da.as_ref().map(|m| m.offset(self.config.epsilon))
    }

    /// Returns a new model with the instances in `new_ids` added.
    ///
    /// `labels` holds the accepted label of every instance (indexed by id),
    /// including those counted earlier. A link is added when one endpoint is
    /// new and the other carries an accepted label; links between two new
    /// instances are added once. Submitting the same id twice double counts.
    pub fn updated(&self, dataset: &Dataset, labels: &[Option<usize>], new_ids: &[usize]) -> Result<Self> {
        let n = self.n_classes();
        if dataset.n_classes() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dataset.n_classes(),
            });
        }
        if labels.len() != dataset.len() {
            return Err(Error::DimensionMismatch {
                expected: dataset.len(),
                got: labels.len(),
            });
        }
        let mut next = self.clone();
        let new_set: HashSet<usize> = new_ids.iter().copied().collect();
        let label_of = |id: usize| -> Result<usize> {
            let label = labels[id].ok_or(Error::Unlabeled(id))?;
            if label >= n {
                return Err(Error::InvalidLabel { label, n_classes: n });
            }
            Ok(label)
        };
        for &id in new_ids {
            let inst = dataset.instance(id)?;
            let ci = label_of(id)?;
            for &other in &inst.link_ids {
                if new_set.contains(&other) && other < id {
                    continue;
                }
                let Some(cj) = labels[other] else { continue };
                if cj >= n {
                    return Err(Error::InvalidLabel {
                        label: cj,
                        n_classes: n,
                    });
                }
                next.dd[(ci, cj)] += 1.0;
                next.dd[(cj, ci)] += 1.0;
            }
            if let Some(da) = next.da.as_mut() {
                for obs in &inst.attribute_obs {
                    if obs.len() != da.cols() {
                        return Err(Error::DimensionMismatch {
                            expected: da.cols(),
                            got: obs.len(),
                        });
                    }
                    if self.config.hard_attributes {
                        da[(ci, argmax(obs))] += 1.0;
                    } else {
                        da.row_mut(ci).iter_mut().zip(obs).for_each(|(c, p)| *c += p);
                    }
                }
            }
        }
        Ok(next)
    }

    /// Text dump: `psi_dd` block, optional `psi_da` block, `epsilon` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.dd.write_text("psi_dd", &mut out);
        if let Some(da) = &self.da {
            da.write_text("psi_da", &mut out);
        }
        out.push_str(&format!("epsilon {}\n", self.config.epsilon));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().collect();
        let (dd, used) = Matrix::read_text("psi_dd", &lines).map_err(Error::Config)?;
        let mut rest = &lines[used..];
        let da = if rest.first().is_some_and(|l| l.starts_with("psi_da")) {
            let (da, used) = Matrix::read_text("psi_da", rest).map_err(Error::Config)?;
            rest = &rest[used..];
            Some(da)
        } else {
            None
        };
        let epsilon = rest
            .first()
            .and_then(|l| l.strip_prefix("epsilon "))
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| Error::Config("relationship dump needs an `epsilon` line".into()))?;
        Self::from_counts(
            dd,
            da,
            RelationshipConfig {
                epsilon,
                ..Default::default()
            },
        )
    }
}

/// Counts links among the instances in `ids` and their attribute mass.
pub fn build_relationship(
    dataset: &Dataset,
    ids: &[usize],
    labels: &[Option<usize>],
    config: &RelationshipConfig,
) -> Result<RelationshipModel> {
    if labels.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            got: labels.len(),
        });
    }
    let mut counted = vec![None; dataset.len()];
    for &id in ids {
        dataset.instance(id)?;
        counted[id] = Some(labels[id].ok_or(Error::Unlabeled(id))?);
    }
    RelationshipModel::empty(dataset.n_classes(), dataset.m_attribute_classes(), config.clone())?
        .updated(dataset, &counted, ids)
}

pub fn update_relationship(
    model: &RelationshipModel,
    dataset: &Dataset,
    labels: &[Option<usize>],
    new_ids: &[usize],
) -> Result<RelationshipModel> {
    model.updated(dataset, labels, new_ids)
}

pub fn prior_conditionals(model: &RelationshipModel) -> Conditionals {
    Conditionals {
        data_rows: model.data_potential().row_normalized(),
        attr_rows: model.attribute_potential().map(|m| m.row_normalized()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetParts;

    fn pair_dataset() -> Dataset {
        Dataset::from_parts(DatasetParts {
            features: vec![vec![0.0]; 2],
            labels: vec![0, 1],
            edges: vec![(0, 1)],
            n_classes: 2,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn single_link_counts_both_cells() {
        let ds = pair_dataset();
        let model = build_relationship(&ds, &[0, 1], &[Some(0), Some(1)], &Default::default()).unwrap();
        assert_eq!(model.data_counts().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn unlabeled_counted_instance_rejected() {
        let ds = pair_dataset();
        assert!(matches!(
            build_relationship(&ds, &[0, 1], &[Some(0), None], &Default::default()),
            Err(Error::Unlabeled(1))
        ));
    }

    #[test]
    fn link_to_uncounted_instance_skipped() {
        let ds = pair_dataset();
        let model = build_relationship(&ds, &[0], &[Some(0), Some(1)], &Default::default()).unwrap();
        assert_eq!(model.data_counts(), &Matrix::zeros(2, 2));
    }

    #[test]
    fn no_links_gives_zero_counts_and_uniform_rows() {
        let ds = Dataset::from_parts(DatasetParts {
            features: vec![vec![0.0]; 3],
            labels: vec![0, 1, 2],
            n_classes: 3,
            ..Default::default()
        })
        .unwrap();
        let model = build_relationship(&ds, &[0, 1, 2], &[Some(0), Some(1), Some(2)], &Default::default()).unwrap();
        assert_eq!(model.data_counts(), &Matrix::zeros(3, 3));
        let prior = prior_conditionals(&model);
        for j in 0..3 {
            assert!(prior.data_rows.row(j).iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn update_identity_and_additivity() {
        let ds = pair_dataset();
        let labels = [Some(0), Some(1)];
        let base = build_relationship(&ds, &[0, 1], &labels, &Default::default()).unwrap();
        assert_eq!(update_relationship(&base, &ds, &labels, &[]).unwrap(), base);
        let twice = update_relationship(&base, &ds, &labels, &[0, 1]).unwrap();
        assert_eq!(twice.data_counts().to_rows(), vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn prior_rows_normalize_counts() {
        let dd = Matrix::from_rows(&[vec![2.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let model = RelationshipModel::from_counts(dd, None, Default::default()).unwrap();
        let prior = prior_conditionals(&model);
        let e = DEFAULT_EPSILON;
        assert!((prior.data_rows[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((prior.data_rows[(1, 1)] - (4.0 + e) / (6.0 + 2.0 * e)).abs() < 1e-15);
    }

    #[test]
    fn three_class_row_hand_normalization() {
        let dd = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]]).unwrap();
        let model = RelationshipModel::from_counts(dd, None, Default::default()).unwrap();
        let row = prior_conditionals(&model).data_rows.row(0).to_vec();
        for (p, want) in row.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((p - want).abs() < 10.0 * DEFAULT_EPSILON);
        }
    }

    #[test]
    fn asymmetric_counts_rejected() {
        let dd = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(RelationshipModel::from_counts(dd, None, Default::default()).is_err());
    }

    #[test]
    fn attribute_mass_soft_and_hard() {
        let ds = Dataset::from_parts(DatasetParts {
            features: vec![vec![0.0]; 2],
            labels: vec![0, 1],
            attribute_obs: vec![vec![vec![0.7, 0.3]], vec![vec![0.4, 0.6], vec![0.1, 0.9]]],
            n_classes: 2,
            m_attribute_classes: 2,
            ..Default::default()
        })
        .unwrap();
        let labels = [Some(0), Some(1)];
        let soft = build_relationship(&ds, &[0, 1], &labels, &Default::default()).unwrap();
        let da = soft.attribute_counts().unwrap();
        assert_eq!(da.row(0), [0.7, 0.3]);
        assert!((da[(1, 0)] - 0.5).abs() < 1e-15 && (da[(1, 1)] - 1.5).abs() < 1e-15);
        let hard_cfg = RelationshipConfig {
            hard_attributes: true,
            ..Default::default()
        };
        let hard = build_relationship(&ds, &[0, 1], &labels, &hard_cfg).unwrap();
        assert_eq!(
            hard.attribute_counts().unwrap().to_rows(),
            vec![vec![1.0, 0.0], vec![0.0, 2.0]]
        );
    }

    #[test]
    fn text_dump_round_trip() {
        let dd = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 0.5]]).unwrap();
        let da = Matrix::from_rows(&[vec![0.1, 0.2, 0.3], vec![1.0, 0.0, 2.5]]).unwrap();
        let model = RelationshipModel::from_counts(dd, Some(da), Default::default()).unwrap();
        assert_eq!(RelationshipModel::from_text(&model.to_text()).unwrap(), model);
    }
}
