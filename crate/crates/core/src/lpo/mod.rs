//! The local-measurement protocol: vacuum removal, symmetrization (see
//! [`crate::evroutine`]), and the recursive weighted measurement on standard
//! W states, plus the Fortescue-Lo baseline and executable protocol trees.

mod closed;
mod fl;
mod phase1;
pub mod poly;
mod solver;
mod tree;

pub use closed::{
    g6_weak_improvement, triangle_lpo, vi_lpo, vi_sorted_graph, wedge_lpo, WeakImprovement,
};
pub use fl::p_fl;
pub use phase1::{phase1_distribution, phase1_measurement, phase1_success_probability};
pub use solver::{
    f_alpha, p3, p_lpo, subgraph_key, AlphaSample, LpoOptions, LpoSolver, NodeRule,
    OptimizationReport, TieRule,
};
pub use tree::{
    build_protocol_tree, build_protocol_tree_with, BranchRecord, NodeKind, NodeRecord,
    ProtocolTree, TreeBranch, TreeNode, TreeTable, DEFAULT_EPSILON, DEFAULT_LOOP_CAP,
};
