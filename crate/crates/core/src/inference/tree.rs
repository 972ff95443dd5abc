//! Exact sum-product message passing on tree-structured pairwise models.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::prob::normalize;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    /// `potential[(x_a, x_b)]`: rows index states of `a`, columns states of `b`.
    pub potential: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorTree {
    pub node_potentials: Vec<Vec<f64>>,
    pub edges: Vec<TreeEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeBeliefs {
    pub marginals: Vec<Vec<f64>>,
    /// Normalized joint belief over each edge, oriented like its potential.
    pub pairwise: Vec<Matrix>,
}

impl FactorTree {
    fn validate(&self) -> Result<()> {
        let n = self.node_potentials.len();
        if n == 0 {
            return Err(Error::NotATree("no nodes".into()));
        }
        if self.edges.len() != n - 1 {
            return Err(Error::NotATree(format!(
                "{} nodes need {} edges, found {}",
                n,
                n - 1,
                self.edges.len()
            )));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.a >= n || e.b >= n {
                return Err(Error::NotATree(format!("edge {k} references a missing node")));
            }
            let (sa, sb) = (self.node_potentials[e.a].len(), self.node_potentials[e.b].len());
            if e.potential.rows() != sa || e.potential.cols() != sb {
                return Err(Error::DimensionMismatch {
                    expected: sa * sb,
                    got: e.potential.rows() * e.potential.cols(),
                });
            }
            let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
            if ra == rb {
                return Err(Error::NotATree(format!("edge {k} closes a cycle")));
            }
            parent[ra] = rb;
        }
        Ok(())
    }
}

/// Two-pass message passing rooted at node 0. Messages are normalized as
/// they travel, which leaves beliefs unchanged.
pub fn sum_product(tree: &FactorTree) -> Result<TreeBeliefs> {
    tree.validate()?;
    let n = tree.node_potentials.len();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, e) in tree.edges.iter().enumerate() {
        adjacency[e.a].push((e.b, k));
        adjacency[e.b].push((e.a, k));
    }

    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut visited = vec![false; n];
    visited[0] = true;
    order.push(0);
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(u, _) in &adjacency[v] {
            if !visited[u] {
                visited[u] = true;
                parent[u] = v;
                order.push(u);
            }
        }
    }

    // messages[k][0]: a -> b (over states of b); messages[k][1]: b -> a.
    let mut messages: Vec<[Vec<f64>; 2]> = tree
        .edges
        .iter()
        .map(|e| [vec![1.0; e.potential.cols()], vec![1.0; e.potential.rows()]])
        .collect();

    let incoming_product = |messages: &[[Vec<f64>; 2]], v: usize, except: Option<usize>| {
        let mut h = tree.node_potentials[v].clone();
        for &(_, k) in &adjacency[v] {
            if Some(k) == except {
                continue;
            }
            let m = if tree.edges[k].b == v {
                &messages[k][0]
            } else {
                &messages[k][1]
            };
            h.iter_mut().zip(m).for_each(|(x, y)| *x *= y);
        }
        h
    };
    let send = |messages: &mut [[Vec<f64>; 2]], from: usize, k: usize| {
        let h = incoming_product(messages, from, Some(k));
        let e = &tree.edges[k];
        let mut msg = if e.a == from {
            (0..e.potential.cols())
                .map(|xb| (0..e.potential.rows()).map(|xa| e.potential[(xa, xb)] * h[xa]).sum())
                .collect::<Vec<f64>>()
        } else {
            (0..e.potential.rows())
                .map(|xa| (0..e.potential.cols()).map(|xb| e.potential[(xa, xb)] * h[xb]).sum())
                .collect::<Vec<f64>>()
        };
        normalize(&mut msg);
        messages[k][usize::from(e.a != from)] = msg;
    };

    for &v in order.iter().skip(1).rev() {
        let k = edge_between(&adjacency, v, parent[v]);
        send(&mut messages, v, k);
    }
    for &v in &order {
        for &(u, k) in &adjacency[v] {
            if parent[u] == v {
                send(&mut messages, v, k);
            }
        }
    }

    let marginals = (0..n)
        .map(|v| {
            let mut h = incoming_product(&messages, v, None);
            normalize(&mut h);
            h
        })
        .collect();
    let pairwise = tree
        .edges
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let ha = incoming_product(&messages, e.a, Some(k));
            let hb = incoming_product(&messages, e.b, Some(k));
            let mut belief = Matrix::zeros(e.potential.rows(), e.potential.cols());
            let mut total = 0.0;
            for xa in 0..belief.rows() {
                for xb in 0..belief.cols() {
                    let v = e.potential[(xa, xb)] * ha[xa] * hb[xb];
                    belief[(xa, xb)] = v;
                    total += v;
                }
            }
            if total > 0.0 {
                for xa in 0..belief.rows() {
                    belief.row_mut(xa).iter_mut().for_each(|v| *v /= total);
                }
            }
            belief
        })
        .collect();
    Ok(TreeBeliefs { marginals, pairwise })
}

fn edge_between(adjacency: &[Vec<(usize, usize)>], v: usize, u: usize) -> usize {
    adjacency[v]
        .iter()
        .find(|&&(w, _)| w == u)
        .map(|&(_, k)| k)
        .expect("tree edge")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_marginal_is_normalized_potential() {
        let tree = FactorTree {
            node_potentials: vec![vec![1.0, 3.0]],
            edges: vec![],
        };
        assert_eq!(sum_product(&tree).unwrap().marginals[0], vec![0.25, 0.75]);
    }

    #[test]
    fn two_node_joint_by_hand() {
        // Edge row [1, 3] with the center clamped to state 0 and a uniform leaf:
        // joint(0, .) = [1, 3] * 0.5 -> conditional [0.25, 0.75].
        let tree = FactorTree {
            node_potentials: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            edges: vec![TreeEdge {
                a: 0,
                b: 1,
                potential: Matrix::from_rows(&[vec![1.0, 3.0], vec![2.0, 2.0]]).unwrap(),
            }],
        };
        let beliefs = sum_product(&tree).unwrap();
        assert_eq!(beliefs.marginals[1], vec![0.25, 0.75]);
        assert_eq!(beliefs.pairwise[0].row(0), [0.25, 0.75]);
        assert_eq!(beliefs.pairwise[0].row(1), [0.0, 0.0]);
    }

    #[test]
    fn uniform_potentials_give_uniform_marginals() {
        let tree = FactorTree {
            node_potentials: vec![vec![1.0; 3]; 4],
            edges: (1..4)
                .map(|b| TreeEdge {
                    a: b - 1,
                    b,
                    potential: Matrix::filled(3, 3, 2.0),
                })
                .collect(),
        };
        for m in sum_product(&tree).unwrap().marginals {
            assert!(m.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn cycle_and_wrong_edge_count_rejected() {
        let edge = |a, b| TreeEdge {
            a,
            b,
            potential: Matrix::filled(2, 2, 1.0),
        };
        let cyclic = FactorTree {
            node_potentials: vec![vec![1.0; 2]; 3],
            edges: vec![edge(0, 1), edge(1, 0)],
        };
        assert!(matches!(sum_product(&cyclic), Err(Error::NotATree(_))));
        let dense = FactorTree {
            node_potentials: vec![vec![1.0; 2]; 3],
            edges: vec![edge(0, 1), edge(1, 2), edge(2, 0)],
        };
        assert!(matches!(sum_product(&dense), Err(Error::NotATree(_))));
    }
}
