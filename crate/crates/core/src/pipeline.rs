//! End-to-end clustering: bandwidth, density estimate, filtration, cores and
//! classification of the remaining points.

use serde::{Deserialize, Serialize};

use crate::bandwidth::{select, BandwidthChoice, BandwidthResult, SearchRange, Selector};
use crate::classify::{classify, Classification};
use crate::density::{DensityModel, Sample};
use crate::error::Result;
use crate::hdr::{levels_from_densities, Level, TauGrid};
use crate::tree::graph::{DEFAULT_KNN, DEFAULT_STEP};
use crate::tree::{build_graph, build_merge_tree, cluster_cores, mode_function, ClusterTree, CoreAssignment};
use crate::tree::{GraphConfig, ModeFunction, Neighborhood};

/// Sample size from which [`GraphMode::Auto`] switches to a k-nearest-neighbor graph.
pub const AUTO_KNN_MIN_N: usize = 1500;

/// Neighborhood policy, resolved against the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    /// Complete graph below [`AUTO_KNN_MIN_N`] points, `k`-NN graph from there on.
    Auto,
    Complete,
    Knn(usize),
    MutualKnn(usize),
}

impl GraphMode {
    pub fn neighborhood(&self, n: usize) -> Neighborhood {
        match *self {
            GraphMode::Auto if n >= AUTO_KNN_MIN_N => Neighborhood::Knn(DEFAULT_KNN),
            GraphMode::Auto | GraphMode::Complete => Neighborhood::Complete,
            GraphMode::Knn(k) => Neighborhood::Knn(k),
            GraphMode::MutualKnn(k) => Neighborhood::MutualKnn(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub bandwidth: BandwidthChoice,
    pub range: SearchRange,
    pub graph: GraphMode,
    pub step: f64,
    pub taus: TauGrid,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bandwidth: BandwidthChoice::Select(Selector::Lcv),
            range: SearchRange::default(),
            graph: GraphMode::Auto,
            step: DEFAULT_STEP,
            taus: TauGrid::default(),
        }
    }
}

impl PipelineConfig {
    pub fn graph_config(&self, n: usize) -> GraphConfig {
        GraphConfig { step: self.step, neighborhood: self.graph.neighborhood(n) }
    }
}

/// Everything derived from one bandwidth.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub h: f64,
    pub model: DensityModel,
    pub tree: ClusterTree,
    pub levels: Vec<Level>,
    pub mode_function: ModeFunction,
    pub cores: CoreAssignment,
    pub antipodal_pairs: usize,
}

#[derive(Debug, Clone)]
pub struct ClusterResult {
    /// Present when the bandwidth came from a selector.
    pub selection: Option<BandwidthResult>,
    pub filtration: Filtration,
    pub classification: Classification,
}

pub fn choose_bandwidth(sample: &Sample, config: &PipelineConfig) -> Result<(f64, Option<BandwidthResult>)> {
    match config.bandwidth {
        BandwidthChoice::Fixed(h) => Ok((h, None)),
        BandwidthChoice::Select(sel) => {
            let r = select(sample, sel, config.range)?;
            Ok((r.h, Some(r)))
        }
    }
}

/// Density estimate, merge tree, HDR levels and cores at bandwidth `h`.
pub fn filtration(sample: &Sample, h: f64, config: &PipelineConfig) -> Result<Filtration> {
    let model = DensityModel::kde(sample.clone(), h)?;
    let graph = build_graph(&model, sample, &config.graph_config(sample.len()))?;
    let tree = build_merge_tree(&graph);
    let levels = levels_from_densities(graph.vertex_density(), &config.taus)?;
    let mode_function = mode_function(&tree, &levels);
    let cores = cluster_cores(&tree, &levels)?;
    Ok(Filtration { h, model, tree, levels, mode_function, cores, antipodal_pairs: graph.antipodal_pairs() })
}

pub fn cluster(sample: &Sample, config: &PipelineConfig) -> Result<ClusterResult> {
    let (h, selection) = choose_bandwidth(sample, config)?;
    let filtration = filtration(sample, h, config)?;
    let classification = classify(&filtration.cores, sample, h)?;
    Ok(ClusterResult { selection, filtration, classification })
}
