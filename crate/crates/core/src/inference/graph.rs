use std::fmt::Write as _;

use super::tree::{sum_product, FactorTree, TreeEdge};
use crate::classifier::Classifier;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::prob::normalize;
use crate::relationship::RelationshipModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Data,
    Attribute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub kind: LeafKind,
    pub potential: Vec<f64>,
}

/// Star graph: one center data node joined to every linked data instance
/// and every observed attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceGraph {
    pub center: Vec<f64>,
    pub leaves: Vec<Leaf>,
    /// Smoothed data-data co-occurrence counts, `n x n`.
    pub data_edge: Matrix,
    /// Smoothed data-attribute co-occurrence counts, `n x m`.
    pub attribute_edge: Option<Matrix>,
}

impl InstanceGraph {
    pub fn new(center: Vec<f64>, leaves: Vec<Leaf>, data_edge: Matrix, attribute_edge: Option<Matrix>) -> Result<Self> {
        let n = center.len();
        if data_edge.rows() != n || data_edge.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: data_edge.rows(),
            });
        }
        if let Some(a) = &attribute_edge {
            if a.rows() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: a.rows(),
                });
            }
        }
        let valid = |p: &[f64]| p.iter().all(|&v| v >= 0.0 && v.is_finite()) && p.iter().any(|&v| v > 0.0);
        if !valid(&center) {
            return Err(Error::InvalidParameter(
                "center potential must be non-negative and not all zero".into(),
            ));
        }
        for leaf in &leaves {
            let expected = match leaf.kind {
                LeafKind::Data => n,
                LeafKind::Attribute => attribute_edge
                    .as_ref()
                    .map(Matrix::cols)
                    .ok_or_else(|| Error::InvalidParameter("attribute leaf without attribute edges".into()))?,
            };
            if leaf.potential.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    got: leaf.potential.len(),
                });
            }
            if !valid(&leaf.potential) {
                return Err(Error::InvalidParameter(
                    "leaf potential must be non-negative and not all zero".into(),
                ));
            }
        }
        Ok(Self {
            center,
            leaves,
            data_edge,
            attribute_edge,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.center.len()
    }

    /// Number of data-data edges.
    pub fn data_edges(&self) -> usize {
        self.leaves.iter().filter(|l| l.kind == LeafKind::Data).count()
    }

    /// Number of data-attribute edges.
    pub fn attribute_edges(&self) -> usize {
        self.leaves.len() - self.data_edges()
    }

    fn edge_potential(&self, kind: LeafKind) -> &Matrix {
        match kind {
            LeafKind::Data => &self.data_edge,
            LeafKind::Attribute => self.attribute_edge.as_ref().expect("validated at construction"),
        }
    }

    /// The star as a general tree: the center is node 0, leaf `i` is node `i + 1`.
    pub fn to_tree(&self) -> FactorTree {
        let mut node_potentials = vec![self.center.clone()];
        let mut edges = Vec::with_capacity(self.leaves.len());
        for (i, leaf) in self.leaves.iter().enumerate() {
            node_potentials.push(leaf.potential.clone());
            edges.push(TreeEdge {
                a: 0,
                b: i + 1,
                potential: self.edge_potential(leaf.kind).clone(),
            });
        }
        FactorTree { node_potentials, edges }
    }

    /// Text dump of potentials and sum-product beliefs:
    ///
    /// ```text
    /// graph <n> <m> <leaves>
    /// center <potential> | <marginal>
    /// data|attribute <potential> | <marginal>
    /// ```
    pub fn debug_dump(&self) -> Result<String> {
        let beliefs = sum_product(&self.to_tree())?;
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        let m = self.attribute_edge.as_ref().map_or(0, Matrix::cols);
        let _ = writeln!(out, "graph {} {m} {}", self.n_classes(), self.leaves.len());
        let _ = writeln!(out, "center {} | {}", join(&self.center), join(&beliefs.marginals[0]));
        for (i, leaf) in self.leaves.iter().enumerate() {
            let kind = match leaf.kind {
                LeafKind::Data => "data",
                LeafKind::Attribute => "attribute",
            };
            let _ = writeln!(
                out,
                "{kind} {} | {}",
                join(&leaf.potential),
                join(&beliefs.marginals[i + 1])
            );
        }
        Ok(out)
    }
}

/// Center and linked-instance potentials come from the classifier, attribute
/// potentials from the stored observations, edge potentials from the
/// smoothed co-occurrence counts.
pub fn build_instance_graph<C: Classifier + ?Sized>(
    dataset: &Dataset,
    id: usize,
    classifier: &C,
    relationship: &RelationshipModel,
) -> Result<InstanceGraph> {
    let inst = dataset.instance(id)?;
    let n = dataset.n_classes();
    if classifier.n_classes() != n || relationship.n_classes() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: classifier.n_classes(),
        });
    }
    if classifier.dim() != dataset.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.feature_dim(),
            got: classifier.dim(),
        });
    }
    let attribute_edge = relationship.attribute_potential();
    let use_attributes = attribute_edge.is_some();
    if inst.link_ids.is_empty() && (!use_attributes || inst.attribute_obs.is_empty()) {
        return Err(Error::NoContext { id });
    }

    let mut leaves = Vec::with_capacity(inst.link_ids.len() + inst.attribute_obs.len());
    for &other in &inst.link_ids {
        leaves.push(Leaf {
            kind: LeafKind::Data,
            potential: classifier.predict_proba(dataset.features(other))?,
        });
    }
    if use_attributes {
        leaves.extend(inst.attribute_obs.iter().map(|obs| Leaf {
            kind: LeafKind::Attribute,
            potential: obs.clone(),
        }));
    }
    InstanceGraph::new(
        classifier.predict_proba(&inst.features)?,
        leaves,
        relationship.data_potential(),
        attribute_edge,
    )
}

/// Conditional distribution of every leaf given the center in state `class`.
///
/// On a star the leaves are independent given the center, so each is
/// proportional to the edge row of `class` times the leaf potential.
pub fn clamped_leaf_marginals(graph: &InstanceGraph, class: usize) -> Result<Vec<Vec<f64>>> {
    if class >= graph.n_classes() {
        return Err(Error::InvalidLabel {
            label: class,
            n_classes: graph.n_classes(),
        });
    }
    Ok(graph
        .leaves
        .iter()
        .map(|leaf| {
            let row = graph.edge_potential(leaf.kind).row(class);
            let mut m: Vec<f64> = row.iter().zip(&leaf.potential).map(|(a, b)| a * b).collect();
            normalize(&mut m);
            m
        })
        .collect())
}

/// Posterior class-conditional relations of one instance. A part is `None`
/// when the graph has no edges of that kind.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorConditionals {
    pub data_rows: Option<Matrix>,
    pub attr_rows: Option<Matrix>,
}

/// Row `j` of each part averages the clamped leaf marginals over the edges
/// of that kind with the center fixed to class `j`, renormalized to sum to one.
pub fn posterior_conditionals(graph: &InstanceGraph) -> Result<PosteriorConditionals> {
    if graph.leaves.is_empty() {
        return Err(Error::Empty("instance graph leaves"));
    }
    let n = graph.n_classes();
    let part_width = |kind: LeafKind| graph.edge_potential(kind).cols();
    let has_data = graph.data_edges() > 0;
    let has_attr = graph.attribute_edges() > 0;
    let mut data_rows = has_data.then(|| Matrix::zeros(n, part_width(LeafKind::Data)));
    let mut attr_rows = has_attr.then(|| Matrix::zeros(n, part_width(LeafKind::Attribute)));
    for class in 0..n {
        let marginals = clamped_leaf_marginals(graph, class)?;
        for (leaf, marginal) in graph.leaves.iter().zip(&marginals) {
            let target = match leaf.kind {
                LeafKind::Data => data_rows.as_mut(),
                LeafKind::Attribute => attr_rows.as_mut(),
            }
            .expect("part exists when it has a leaf");
            target
                .row_mut(class)
                .iter_mut()
                .zip(marginal)
                .for_each(|(acc, p)| *acc += p);
        }
        for rows in [data_rows.as_mut(), attr_rows.as_mut()].into_iter().flatten() {
            normalize(rows.row_mut(class));
        }
    }
    Ok(PosteriorConditionals { data_rows, attr_rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::MlrModel;
    use crate::dataset::DatasetParts;
    use crate::relationship::{build_relationship, prior_conditionals, RelationshipConfig};

    fn star(leaves: Vec<Leaf>, data_edge: Matrix, attribute_edge: Option<Matrix>) -> InstanceGraph {
        let n = data_edge.rows();
        InstanceGraph::new(vec![1.0 / n as f64; n], leaves, data_edge, attribute_edge).unwrap()
    }

    fn data_leaf(p: &[f64]) -> Leaf {
        Leaf {
            kind: LeafKind::Data,
            potential: p.to_vec(),
        }
    }

    #[test]
    fn uniform_leaf_passes_edge_row_through() {
        let edge = Matrix::from_rows(&[vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let g = star(vec![data_leaf(&[0.5, 0.5])], edge, None);
        let m = clamped_leaf_marginals(&g, 0).unwrap();
        assert!((m[0][0] - 0.2).abs() < 1e-15 && (m[0][1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn edge_row_one_three_matches_enumeration() {
        let edge = Matrix::from_rows(&[vec![1.0, 3.0], vec![1.0, 1.0]]).unwrap();
        let g = star(vec![data_leaf(&[0.5, 0.5])], edge.clone(), None);
        // Enumerate the joint of (center, leaf) with the center fixed to 0.
        let joint: Vec<f64> = (0..2).map(|x| edge[(0, x)] * 0.5).collect();
        let z: f64 = joint.iter().sum();
        let m = clamped_leaf_marginals(&g, 0).unwrap();
        assert_eq!(m[0], vec![joint[0] / z, joint[1] / z]);
        assert_eq!(m[0], vec![0.25, 0.75]);
    }

    #[test]
    fn one_hot_evidence_dominates() {
        let eps = 1e-6;
        let edge = Matrix::from_rows(&[vec![5.0, eps, 2.0], vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 9.0]])
            .unwrap()
            .offset(eps);
        let g = star(vec![data_leaf(&[0.0, 1.0, 0.0])], edge, None);
        for class in 0..3 {
            let m = clamped_leaf_marginals(&g, class).unwrap();
            assert!(m[0][1] >= 1.0 - 1e-4);
        }
    }

    #[test]
    fn posterior_with_one_leaf_equal_to_prior_row_squares_it() {
        let counts = Matrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 5.0]]).unwrap();
        let model = RelationshipModel::from_counts(counts, None, RelationshipConfig::default()).unwrap();
        let prior = prior_conditionals(&model);
        let j = 1;
        let g = star(vec![data_leaf(prior.data_rows.row(j))], model.data_potential(), None);
        let post = posterior_conditionals(&g).unwrap();
        let sq: Vec<f64> = prior.data_rows.row(j).iter().map(|p| p * p).collect();
        let z: f64 = sq.iter().sum();
        let rows = post.data_rows.unwrap();
        for (got, want) in rows.row(j).iter().zip(&sq) {
            assert!((got - want / z).abs() < 1e-12);
        }
        // Same row by enumerating the tree with the center clamped.
        let mut tree = g.to_tree();
        tree.node_potentials[0] = vec![0.0, 1.0];
        let beliefs = sum_product(&tree).unwrap();
        for (got, want) in rows.row(j).iter().zip(&beliefs.marginals[1]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn attribute_only_graph_has_no_data_part() {
        let attr_edge = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]).unwrap();
        let leaves = vec![
            Leaf {
                kind: LeafKind::Attribute,
                potential: vec![0.98, 0.01, 0.01],
            },
            Leaf {
                kind: LeafKind::Attribute,
                potential: vec![0.01, 0.01, 0.98],
            },
        ];
        let g = star(leaves, Matrix::filled(2, 2, 1.0), Some(attr_edge));
        assert_eq!((g.data_edges(), g.attribute_edges()), (0, 2));
        let post = posterior_conditionals(&g).unwrap();
        assert!(post.data_rows.is_none());
        assert_eq!(post.attr_rows.unwrap().rows(), 2);
    }

    fn citation_dataset() -> Dataset {
        Dataset::from_parts(DatasetParts {
            features: vec![vec![1.0, 0.0]; 5],
            labels: vec![0, 1, 1, 0, 1],
            edges: vec![(0, 1), (0, 2), (0, 3)],
            n_classes: 2,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn document_instance_with_three_citations() {
        let ds = citation_dataset();
        let labels: Vec<Option<usize>> = ds.true_labels().into_iter().map(Some).collect();
        let rel = build_relationship(&ds, &[0, 1, 2, 3], &labels, &Default::default()).unwrap();
        let g = build_instance_graph(&ds, 0, &MlrModel::zeros(2, 2), &rel).unwrap();
        assert_eq!((g.data_edges(), g.attribute_edges()), (3, 0));
        for leaf in &g.leaves {
            assert_eq!(leaf.potential, vec![0.5, 0.5]);
        }
        assert_eq!(g.center, vec![0.5, 0.5]);
    }

    #[test]
    fn isolated_instance_has_no_context() {
        let ds = citation_dataset();
        let rel = RelationshipModel::empty(2, 0, Default::default()).unwrap();
        assert!(matches!(
            build_instance_graph(&ds, 4, &MlrModel::zeros(2, 2), &rel),
            Err(Error::NoContext { id: 4 })
        ));
    }

    #[test]
    fn scene_style_instance_with_three_objects() {
        let ds = Dataset::from_parts(DatasetParts {
            features: vec![vec![0.0]],
            labels: vec![0],
            attribute_obs: vec![vec![
                vec![0.9, 0.05, 0.05],
                vec![0.05, 0.9, 0.05],
                vec![0.05, 0.05, 0.9],
            ]],
            n_classes: 2,
            m_attribute_classes: 3,
            ..Default::default()
        })
        .unwrap();
        let rel = build_relationship(&ds, &[0], &[Some(0)], &Default::default()).unwrap();
        let g = build_instance_graph(&ds, 0, &MlrModel::zeros(2, 1), &rel).unwrap();
        assert_eq!((g.data_edges(), g.attribute_edges()), (0, 3));
        assert_eq!(g.to_tree().node_potentials.len(), 4);
        let dump = g.debug_dump().unwrap();
        assert!(dump.starts_with("graph 2 3 3\n"));
        assert_eq!(dump.lines().count(), 5);
    }
}
