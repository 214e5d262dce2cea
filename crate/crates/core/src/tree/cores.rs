//! Empirical mode function and cluster cores on a tau grid.

use serde::{Deserialize, Serialize};

use super::merge::ClusterTree;
use crate::error::{Error, Result};
use crate::hdr::Level;

/// `count` holds from `content` up to the next breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub content: f64,
    pub count: usize,
}

/// Number of components as a right-continuous step function of the
/// probability content `1 - tau`, zero at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFunction {
    breakpoints: Vec<Breakpoint>,
}

impl ModeFunction {
    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn value_at(&self, content: f64) -> usize {
        if !(content > 0.0 && content < 1.0) {
            return 0;
        }
        let idx = self.breakpoints.partition_point(|b| b.content <= content);
        self.breakpoints[idx - 1].count
    }

    pub fn max(&self) -> usize {
        self.breakpoints.iter().map(|b| b.count).max().unwrap_or(0)
    }
}

pub fn mode_function(tree: &ClusterTree, levels: &[Level]) -> ModeFunction {
    let mut breakpoints: Vec<Breakpoint> = levels
        .iter()
        .map(|l| Breakpoint { content: 1.0 - l.tau, count: tree.count_at_level(l.threshold) })
        .collect();
    breakpoints.sort_by(|a, b| a.content.total_cmp(&b.content));
    breakpoints.insert(0, Breakpoint { content: 0.0, count: 0 });
    breakpoints.push(Breakpoint { content: 1.0, count: 0 });
    ModeFunction { breakpoints }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreAssignment {
    pub n_c: usize,
    /// Density threshold at which the cores were read off.
    pub core_level: f64,
    pub core_tau: f64,
    /// Core label in `1..=n_c`, or `None` for points outside every core.
    pub labels: Vec<Option<usize>>,
}

impl CoreAssignment {
    pub fn core_members(&self, j: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == Some(j)).collect()
    }
}

/// Cores are the components at the smallest grid threshold among those that
/// reach the maximal component count. Labels follow the smallest member index.
pub fn cluster_cores(tree: &ClusterTree, levels: &[Level]) -> Result<CoreAssignment> {
    if tree.n() == 0 {
        return Err(Error::EmptySample);
    }
    let mut best: Option<(usize, Level)> = None;
    for l in levels {
        let c = tree.count_at_level(l.threshold);
        best = match best {
            Some((bc, bl)) if bc > c || (bc == c && bl.threshold <= l.threshold) => Some((bc, bl)),
            _ => Some((c, *l)),
        };
    }
    let (n_c, level) = match best {
        Some((c, l)) if c > 0 => (c, l),
        _ => return Err(Error::InvalidArgument("no grid level yields a component".into())),
    };
    let mut labels = vec![None; tree.n()];
    for (j, comp) in tree.components_at_level(level.threshold).into_iter().enumerate() {
        for v in comp {
            labels[v] = Some(j + 1);
        }
    }
    Ok(CoreAssignment { n_c, core_level: level.threshold, core_tau: level.tau, labels })
}
