//! Merge tree of the superlevel-set filtration of a weighted graph.
//!
//! At level `k` the graph keeps the vertices with density `>= k` and the edges
//! with weight `>= k`; edges of weight 0 are never present. The tree is built
//! in one sweep over the distinct levels in decreasing order, so it is exact
//! at every `k` rather than on a grid.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::graph::WeightedGraph;
use super::union_find::UnionFind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    /// Density level at which the component appears.
    pub birth: f64,
    /// Level at which it merges into its parent; 0 for roots.
    pub death: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Highest-density vertex of the component (lowest index on ties).
    pub representative: usize,
    /// Vertices of the component at its birth level, sorted.
    pub members_at_birth: Vec<usize>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Whether this node is one of the components at level `k`.
    pub fn alive_at(&self, k: f64) -> bool {
        self.birth >= k && (self.parent.is_none() || self.death < k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree {
    nodes: Vec<TreeNode>,
    /// Node that each vertex belongs to when it first becomes active.
    entry_node: Vec<usize>,
    vertex_density: Vec<f64>,
    sorted_density: Vec<f64>,
}

pub fn build_merge_tree(graph: &WeightedGraph) -> ClusterTree {
    let n = graph.n();
    let dens = graph.vertex_density();
    let mut vorder: Vec<usize> = (0..n).collect();
    vorder.sort_by(|&a, &b| dens[b].total_cmp(&dens[a]).then(a.cmp(&b)));
    let mut edges: Vec<_> = graph.edges().iter().filter(|e| e.weight > 0.0).collect();
    edges.sort_by(|a, b| b.weight.total_cmp(&a.weight));

    let mut uf = UnionFind::new(n);
    // per set root: tree nodes of the components absorbed since the last level,
    // and the vertices of the set
    let mut prior: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut entry_node = vec![usize::MAX; n];
    let mut stamp = vec![usize::MAX; n];
    let (mut vi, mut ei) = (0, 0);
    let mut round = 0;

    while vi < n || ei < edges.len() {
        let next_v = vorder.get(vi).map(|&v| dens[v]).unwrap_or(f64::NEG_INFINITY);
        let next_e = edges.get(ei).map(|e| e.weight).unwrap_or(f64::NEG_INFINITY);
        let level = next_v.max(next_e);
        let mut fresh = Vec::new();
        let mut touched = Vec::new();
        while vi < n && dens[vorder[vi]] == level {
            let v = vorder[vi];
            members[v].push(v);
            fresh.push(v);
            touched.push(v);
            vi += 1;
        }
        while ei < edges.len() && edges[ei].weight == level {
            let e = edges[ei];
            if let Some((keep, gone)) = uf.union(e.i, e.j) {
                let p = std::mem::take(&mut prior[gone]);
                prior[keep].extend(p);
                let mut m = std::mem::take(&mut members[gone]);
                if m.len() > members[keep].len() {
                    std::mem::swap(&mut m, &mut members[keep]);
                }
                members[keep].extend(m);
                touched.push(keep);
            }
            ei += 1;
        }
        for t in touched {
            let r = uf.find(t);
            if stamp[r] == round {
                continue;
            }
            stamp[r] = round;
            let node = match prior[r].len() {
                1 => prior[r][0],
                0 => {
                    let id = nodes.len();
                    let mut m = members[r].clone();
                    m.sort_unstable();
                    nodes.push(TreeNode {
                        id,
                        birth: level,
                        death: 0.0,
                        parent: None,
                        children: Vec::new(),
                        representative: m[0],
                        members_at_birth: m,
                    });
                    id
                }
                _ => {
                    let id = nodes.len();
                    let mut children = std::mem::take(&mut prior[r]);
                    children.sort_unstable();
                    for &c in &children {
                        nodes[c].death = level;
                        nodes[c].parent = Some(id);
                    }
                    let representative = children
                        .iter()
                        .map(|&c| nodes[c].representative)
                        .min_by(|&a, &b| dens[b].total_cmp(&dens[a]).then(a.cmp(&b)))
                        .expect("merge has children");
                    let mut m = members[r].clone();
                    m.sort_unstable();
                    nodes.push(TreeNode {
                        id,
                        birth: level,
                        death: 0.0,
                        parent: None,
                        children,
                        representative,
                        members_at_birth: m,
                    });
                    id
                }
            };
            prior[r] = vec![node];
        }
        for v in fresh {
            entry_node[v] = prior[uf.find(v)][0];
        }
        round += 1;
    }

    let mut sorted_density = dens.to_vec();
    sorted_density.sort_by(f64::total_cmp);
    ClusterTree { nodes, entry_node, vertex_density: dens.to_vec(), sorted_density }
}

impl ClusterTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.vertex_density.len()
    }

    pub fn vertex_density(&self) -> &[f64] {
        &self.vertex_density
    }

    pub fn roots(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.parent.is_none())
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Fraction of vertices with density `>= k`.
    pub fn probability_content(&self, k: f64) -> f64 {
        let n = self.sorted_density.len();
        if n == 0 {
            return 0.0;
        }
        let below = self.sorted_density.partition_point(|&d| d < k);
        (n - below) as f64 / n as f64
    }

    pub fn count_at_level(&self, k: f64) -> usize {
        self.nodes.iter().filter(|n| n.alive_at(k)).count()
    }

    /// Components at level `k`, each sorted and ordered by smallest vertex.
    pub fn components_at_level(&self, k: f64) -> Vec<Vec<usize>> {
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for v in 0..self.n() {
            if self.vertex_density[v] < k {
                continue;
            }
            let mut node = self.entry_node[v];
            while !self.nodes[node].alive_at(k) {
                node = self.nodes[node].parent.expect("dead node has a parent");
            }
            let idx = *slot.entry(node).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[idx].push(v);
        }
        out
    }

    /// Serializable form with levels given both as densities and as
    /// probability contents.
    pub fn to_export(&self) -> TreeExport {
        let level = |k: f64| LevelPoint { density: k, content: self.probability_content(k) };
        TreeExport {
            n: self.n(),
            leaf_count: self.leaf_count(),
            vertex_density: self.vertex_density.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|nd| NodeExport {
                    id: nd.id,
                    parent: nd.parent,
                    children: nd.children.clone(),
                    birth: level(nd.birth),
                    death: level(nd.death),
                    representative: nd.representative,
                    members_at_birth: nd.members_at_birth.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPoint {
    pub density: f64,
    pub content: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExport {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub birth: LevelPoint,
    pub death: LevelPoint,
    pub representative: usize,
    pub members_at_birth: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeExport {
    pub n: usize,
    pub leaf_count: usize,
    pub vertex_density: Vec<f64>,
    pub nodes: Vec<NodeExport>,
}
