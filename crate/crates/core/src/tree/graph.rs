//! Similarity graph over the sample: each edge carries the minimum of the
//! density along the minor arc between its endpoints.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, Sample};
use crate::error::{Error, Result};
use crate::sphere::{angle_from_dot, dot, ANTIPODAL_TOL};

pub const DEFAULT_STEP: f64 = 0.02;
pub const DEFAULT_KNN: usize = 30;
/// Every arc is evaluated at no fewer than this many interior points.
pub const MIN_INTERIOR_POINTS: usize = 5;

/// Which vertex pairs receive an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "k")]
pub enum Neighborhood {
    Complete,
    /// Pair kept when either endpoint is among the other's `k` nearest.
    Knn(usize),
    /// Pair kept when both endpoints are among each other's `k` nearest.
    MutualKnn(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Maximum spacing in radians between density evaluations along an arc.
    pub step: f64,
    pub neighborhood: Neighborhood,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { step: DEFAULT_STEP, neighborhood: Neighborhood::Complete }
    }
}

impl GraphConfig {
    pub fn knn(k: usize) -> Self {
        GraphConfig { neighborhood: Neighborhood::Knn(k), ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("geodesic step must be positive, got {}", self.step)));
        }
        match self.neighborhood {
            Neighborhood::Knn(0) | Neighborhood::MutualKnn(0) => {
                Err(Error::InvalidArgument("knn must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    vertex_density: Vec<f64>,
    edges: Vec<Edge>,
    config: Option<GraphConfig>,
    antipodal_pairs: usize,
}

impl WeightedGraph {
    /// Graph from explicit parts. Edges must satisfy `i < j < n`, be unique and
    /// have `0 <= weight <= min(density_i, density_j)`.
    pub fn from_parts(vertex_density: Vec<f64>, edges: Vec<Edge>) -> Result<Self> {
        let n = vertex_density.len();
        if let Some(v) = vertex_density.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!("invalid vertex density {v}")));
        }
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.i >= e.j || e.j >= n {
                return Err(Error::InvalidArgument(format!("invalid edge ({}, {})", e.i, e.j)));
            }
            if !seen.insert((e.i, e.j)) {
                return Err(Error::InvalidArgument(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
            if !(e.weight >= 0.0 && e.weight <= vertex_density[e.i].min(vertex_density[e.j])) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) weight {} exceeds an endpoint density",
                    e.i, e.j, e.weight
                )));
            }
        }
        Ok(WeightedGraph { vertex_density, edges, config: None, antipodal_pairs: 0 })
    }

    pub fn n(&self) -> usize {
        self.vertex_density.len()
    }

    pub fn vertex_density(&self) -> &[f64] {
        &self.vertex_density
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn config(&self) -> Option<&GraphConfig> {
        self.config.as_ref()
    }

    /// Number of retained pairs that were (numerically) antipodal and got weight 0.
    pub fn antipodal_pairs(&self) -> usize {
        self.antipodal_pairs
    }

    /// Connected components of the subgraph with vertices of density `>= k` and
    /// edges of weight `>= k`, found by depth-first search. Zero-weight edges
    /// are never present. Components are sorted internally and ordered by
    /// their smallest vertex.
    pub fn components_dfs(&self, k: f64) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut adj = vec![Vec::new(); n];
        for e in self.edges.iter().filter(|e| e.weight >= k && e.weight > 0.0) {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] || self.vertex_density[start] < k {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Builds the graph of `sample` under `model`. Vertex densities are the model
/// evaluated at the sample points; arc endpoints reuse them exactly.
pub fn build_graph(model: &DensityModel, sample: &Sample, config: &GraphConfig) -> Result<WeightedGraph> {
    config.validate()?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let vertex_density = model.densities(sample)?;
    let n = sample.len();
    let pairs: Vec<(usize, usize)> = match config.neighborhood {
        Neighborhood::Complete => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        Neighborhood::Knn(k) => knn_pairs(sample, k, false),
        Neighborhood::MutualKnn(k) => knn_pairs(sample, k, true),
    };
    let weighted: Vec<(Edge, bool)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (sample.get(i).coords(), sample.get(j).coords());
            let cos = dot(a, b);
            if 1.0 + cos < ANTIPODAL_TOL {
                return (Edge { i, j, weight: 0.0 }, true);
            }
            let w = arc_minimum(model, a, b, cos, vertex_density[i], vertex_density[j], config.step);
            (Edge { i, j, weight: w }, false)
        })
        .collect();
    let antipodal_pairs = weighted.iter().filter(|(_, a)| *a).count();
    Ok(WeightedGraph {
        vertex_density,
        edges: weighted.into_iter().map(|(e, _)| e).collect(),
        config: Some(*config),
        antipodal_pairs,
    })
}

/// Minimum density over the minor arc from `a` to `b`, endpoints included.
pub(crate) fn arc_minimum(model: &DensityModel, a: &[f64], b: &[f64], cos: f64, fa: f64, fb: f64, step: f64) -> f64 {
    let mut min = fa.min(fb);
    let theta = angle_from_dot(cos);
    if theta == 0.0 {
        return min;
    }
    let segments = ((theta / step).ceil() as usize).max(MIN_INTERIOR_POINTS + 1);
    let sin_theta = theta.sin();
    let mut p = vec![0.0; a.len()];
    for s in 1..segments {
        let t = s as f64 / segments as f64;
        let wa = ((1.0 - t) * theta).sin() / sin_theta;
        let wb = (t * theta).sin() / sin_theta;
        for ((pi, x), y) in p.iter_mut().zip(a).zip(b) {
            *pi = wa * x + wb * y;
        }
        let norm = dot(&p, &p).sqrt();
        p.iter_mut().for_each(|v| *v /= norm);
        min = min.min(model.density_raw(&p));
    }
    min
}

/// Index pairs `(i, j)`, `i < j`, of the k-nearest-neighbor graph by geodesic
/// distance. Ties are broken toward the lower index.
fn knn_pairs(sample: &Sample, k: usize, mutual: bool) -> Vec<(usize, usize)> {
    let n = sample.len();
    let k = k.min(n.saturating_sub(1));
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = sample.get(i).coords();
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dot(x, sample.get(j).coords()), j))
                .collect();
            let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            if k < cand.len() {
                cand.select_nth_unstable_by(k, order);
                cand.truncate(k);
            }
            let mut nb: Vec<usize> = cand.into_iter().map(|c| c.1).collect();
            nb.sort_unstable();
            nb
        })
        .collect();
    let mut pairs = Vec::new();
    for (i, nb) in neighbors.iter().enumerate() {
        for &j in nb {
            let keep = !mutual || neighbors[j].binary_search(&i).is_ok();
            if keep {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}
