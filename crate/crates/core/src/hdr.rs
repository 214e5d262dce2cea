//! Highest density regions: thresholds as order statistics of the fitted
//! density at the sample points, membership tests and the tau grid.
//!
//! For a probability content `1 - tau` the threshold is the lower order
//! statistic `d_(k)` with `k = floor(tau n)` (zero when `k = 0`), so that at
//! least `n - k` sample points lie in the region.

use std::f64::consts::PI;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, ModelKind, Sample};
use crate::error::{Error, Result};
use crate::sphere::UnitVector;

/// Absorbs representation error in `tau * n` (e.g. `0.29 * 100`).
const INDEX_EPS: f64 = 1e-9;
const QUAD_RES_CIRCLE: usize = 20_000;
const QUAD_RES_SPHERE: usize = 400;

/// Strictly increasing probability levels in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    taus: Vec<f64>,
}

impl TauGrid {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidArgument("tau grid is empty".into()));
        }
        if taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::InvalidArgument("tau values must lie in (0, 1)".into()));
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("tau grid must be strictly increasing".into()));
        }
        Ok(TauGrid { taus })
    }

    /// Equispaced grid `lo, lo + step, .., hi`.
    pub fn range(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) {
            return Err(Error::InvalidArgument(format!("invalid tau grid {lo}:{hi}:{step}")));
        }
        let count = ((hi - lo) / step + INDEX_EPS).floor() as usize + 1;
        Self::new((0..count).map(|i| lo + i as f64 * step).collect())
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

impl Default for TauGrid {
    /// 0.01 to 0.99 in steps of 0.01.
    fn default() -> Self {
        TauGrid {
            taus: (1..=99).map(|i| i as f64 / 100.0).collect(),
        }
    }
}

impl FromStr for TauGrid {
    type Err = Error;

    /// Parses `lo:hi:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidArgument(format!("tau grid must be lo:hi:step, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        TauGrid::range(nums[0], nums[1], nums[2])
    }
}

/// A probability level and its density threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub tau: f64,
    pub threshold: f64,
}

/// An estimated highest density region `{x : f(x) >= threshold}`.
#[derive(Debug, Clone, Copy)]
pub struct HdrSpec<'a> {
    pub tau: f64,
    pub threshold: f64,
    pub model: &'a DensityModel,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")));
    }
    Ok(())
}

fn order_index(tau: f64, n: usize) -> usize {
    ((tau * n as f64 + INDEX_EPS).floor() as usize).min(n)
}

/// Lower `tau`-quantile of density values: `d_(floor(tau n))`, or 0 when the index is 0.
pub fn threshold_from_densities(densities: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if densities.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = densities.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_threshold(&sorted, tau))
}

fn sorted_threshold(sorted: &[f64], tau: f64) -> f64 {
    match order_index(tau, sorted.len()) {
        0 => 0.0,
        k => sorted[k - 1],
    }
}

/// Thresholds for every tau of the grid from precomputed density values.
pub fn levels_from_densities(densities: &[f64], grid: &TauGrid) -> Result<Vec<Level>> {
    if densities.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = densities.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(grid
        .taus()
        .iter()
        .map(|&tau| Level { tau, threshold: sorted_threshold(&sorted, tau) })
        .collect())
}

/// Threshold of the `100 (1 - tau)`% region.
///
/// Kernel estimates use the order statistic of the density at the fitting
/// sample. Analytic mixtures on S^1 and S^2 use a quadrature grid instead: the
/// largest grid density whose superlevel set carries probability `>= 1 - tau`.
/// Mixtures in higher dimensions fall back to the order statistic over
/// `sample`, which then acts as a reference sample.
pub fn estimate_threshold<'a>(model: &'a DensityModel, sample: &Sample, tau: f64) -> Result<HdrSpec<'a>> {
    check_tau(tau)?;
    let threshold = match (model.kind(), model.dim()) {
        (ModelKind::Mixture(_), 2 | 3) => population_thresholds(model, &[tau])?[0],
        _ => {
            if sample.is_empty() {
                return Err(Error::EmptySample);
            }
            threshold_from_densities(&model.densities(sample)?, tau)?
        }
    };
    Ok(HdrSpec { tau, threshold, model })
}

/// Thresholds over a tau grid; nondecreasing in tau.
pub fn level_for_tau(model: &DensityModel, sample: &Sample, grid: &TauGrid) -> Result<Vec<Level>> {
    match (model.kind(), model.dim()) {
        (ModelKind::Mixture(_), 2 | 3) => {
            let t = population_thresholds(model, grid.taus())?;
            Ok(grid.taus().iter().zip(t).map(|(&tau, threshold)| Level { tau, threshold }).collect())
        }
        _ => {
            if sample.is_empty() {
                return Err(Error::EmptySample);
            }
            levels_from_densities(&model.densities(sample)?, grid)
        }
    }
}

/// Quadrature-based thresholds of a density on S^1 or S^2.
pub fn population_thresholds(model: &DensityModel, taus: &[f64]) -> Result<Vec<f64>> {
    for &t in taus {
        check_tau(t)?;
    }
    let mut cells: Vec<(f64, f64)> = match model.dim() {
        2 => {
            let step = 2.0 * PI / QUAD_RES_CIRCLE as f64;
            (0..QUAD_RES_CIRCLE)
                .into_par_iter()
                .map(|i| {
                    let t = i as f64 * step;
                    let f = model.density_raw(&[t.cos(), t.sin()]);
                    (f, f * step)
                })
                .collect()
        }
        3 => {
            let dphi = PI / QUAD_RES_SPHERE as f64;
            let n_theta = 2 * QUAD_RES_SPHERE;
            let dtheta = 2.0 * PI / n_theta as f64;
            (0..QUAD_RES_SPHERE)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let phi = (i as f64 + 0.5) * dphi;
                    let (sp, cp) = phi.sin_cos();
                    (0..n_theta).map(move |j| {
                        let (st, ct) = (j as f64 * dtheta).sin_cos();
                        let f = model.density_raw(&[sp * ct, sp * st, cp]);
                        (f, f * sp * dphi * dtheta)
                    })
                })
                .collect()
        }
        d => return Err(Error::UnsupportedDim(d)),
    };
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = cells.iter().map(|c| c.1).sum();
    // cumulative probability of the superlevel set, normalized by the quadrature total
    let mut cum = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for c in &cells {
        acc += c.1 / total;
        cum.push(acc);
    }
    Ok(taus
        .iter()
        .map(|&tau| {
            let idx = cum.partition_point(|&p| p < 1.0 - tau).min(cells.len() - 1);
            cells[idx].0
        })
        .collect())
}

/// Inclusive membership test `f(x) >= threshold`.
pub fn hdr_contains(spec: &HdrSpec<'_>, x: &UnitVector) -> Result<bool> {
    Ok(spec.model.density(x)? >= spec.threshold)
}

pub fn hdr_mask(spec: &HdrSpec<'_>, sample: &Sample) -> Result<Vec<bool>> {
    Ok(spec.model.densities(sample)?.into_iter().map(|f| f >= spec.threshold).collect())
}
