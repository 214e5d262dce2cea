//! Level-set filtration of the density over a similarity graph: edge weights,
//! the merge tree, the mode function and cluster cores.

pub mod cores;
pub mod graph;
pub mod merge;
mod union_find;

pub use cores::{cluster_cores, mode_function, Breakpoint, CoreAssignment, ModeFunction};
pub use graph::{build_graph, Edge, GraphConfig, Neighborhood, WeightedGraph};
pub use merge::{build_merge_tree, ClusterTree, TreeExport, TreeNode};
