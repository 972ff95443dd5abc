//! Per-instance context graphs and the posterior class-conditional
//! relations obtained by clamping the center node to each class in turn.

mod graph;
mod tree;

pub use graph::{
    build_instance_graph, clamped_leaf_marginals, posterior_conditionals, InstanceGraph, Leaf, LeafKind,
    PosteriorConditionals,
};
pub use tree::{sum_product, FactorTree, TreeBeliefs, TreeEdge};
