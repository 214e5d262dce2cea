//! JSON documents for bandwidth exploration: density over a grid of
//! concentrations on the circle (cCluster) and per-bandwidth hemisphere
//! rasters on the sphere (sCluster).

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{select, SearchRange, Selector};
use crate::density::{DensityModel, Sample};
use crate::error::{Error, Result};
use crate::hdr::{levels_from_densities, Level, TauGrid};
use crate::pipeline::Filtration;
use crate::sphere::cartesian_to_circular;
use crate::tree::{Breakpoint, CoreAssignment, TreeExport};

pub const DEFAULT_ANGLE_RESOLUTION: usize = 360;
pub const DEFAULT_DISK_RESOLUTION: usize = 101;
pub const INV_H2_MIN: f64 = 0.5;
pub const INV_H2_MAX: f64 = 400.0;
pub const INV_H2_COUNT: usize = 60;

/// Log-spaced `1/h^2` values from [`INV_H2_MIN`] to [`INV_H2_MAX`].
pub fn default_inv_h2_grid() -> Vec<f64> {
    let (a, b) = (INV_H2_MIN.ln(), INV_H2_MAX.ln());
    (0..INV_H2_COUNT)
        .map(|i| (a + (b - a) * i as f64 / (INV_H2_COUNT - 1) as f64).exp())
        .collect()
}

/// Equispaced angles `2 pi i / resolution`.
pub fn angle_grid(resolution: usize) -> Vec<f64> {
    (0..resolution).map(|i| 2.0 * PI * i as f64 / resolution as f64).collect()
}

fn require_dim(sample: &Sample, d: usize) -> Result<()> {
    if sample.dim() != d {
        return Err(Error::WrongDim { expected: d, found: sample.dim() });
    }
    Ok(())
}

fn check_resolution(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    Ok(())
}

/// Bandwidth chosen by each selector.
pub fn selector_bandwidths(sample: &Sample, selectors: &[Selector], range: SearchRange) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for &sel in selectors {
        if !sel.supports_dim(sample.dim()) {
            return Err(Error::WrongDim { expected: 2, found: sample.dim() });
        }
        out.insert(sel.id().to_string(), select(sample, sel, range)?.h);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CclusterRow {
    pub inv_h2: f64,
    pub h: f64,
    pub density: Vec<f64>,
    /// HDR threshold for each tau of the grid.
    pub thresholds: Vec<f64>,
}

/// Density on `angles` and tau thresholds of the estimate with `kappa = inv_h2`.
pub fn ccluster_row(sample: &Sample, inv_h2: f64, angles: &[f64], taus: &TauGrid) -> Result<CclusterRow> {
    require_dim(sample, 2)?;
    if !(inv_h2 > 0.0 && inv_h2.is_finite()) {
        return Err(Error::InvalidArgument(format!("1/h^2 must be positive, got {inv_h2}")));
    }
    let model = DensityModel::kde_concentration(sample.clone(), inv_h2)?;
    let density = angles.par_iter().map(|&t| model.density_raw(&[t.cos(), t.sin()])).collect();
    let levels = levels_from_densities(&model.densities(sample)?, taus)?;
    Ok(CclusterRow {
        inv_h2,
        h: 1.0 / inv_h2.sqrt(),
        density,
        thresholds: levels.iter().map(|l| l.threshold).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CclusterDoc {
    pub angles: Vec<f64>,
    pub inv_h2: Vec<f64>,
    /// `density[i][j]` at `inv_h2[i]` and `angles[j]`.
    pub density: Vec<Vec<f64>>,
    pub taus: Vec<f64>,
    /// `thresholds[i][t]` for `inv_h2[i]` and `taus[t]`.
    pub thresholds: Vec<Vec<f64>>,
    pub sample_angles: Vec<f64>,
    /// Selector id to its `1/h^2`.
    pub selector_marks: BTreeMap<String, f64>,
}

pub fn export_ccluster(
    sample: &Sample,
    inv_h2: &[f64],
    angle_resolution: usize,
    selectors: &[Selector],
    taus: &TauGrid,
    range: SearchRange,
) -> Result<CclusterDoc> {
    require_dim(sample, 2)?;
    check_resolution(angle_resolution)?;
    let angles = angle_grid(angle_resolution);
    let rows = inv_h2
        .iter()
        .map(|&k| ccluster_row(sample, k, &angles, taus))
        .collect::<Result<Vec<_>>>()?;
    let selector_marks = selector_bandwidths(sample, selectors, range)?
        .into_iter()
        .map(|(id, h)| (id, 1.0 / (h * h)))
        .collect();
    Ok(CclusterDoc {
        angles,
        inv_h2: inv_h2.to_vec(),
        thresholds: rows.iter().map(|r| r.thresholds.clone()).collect(),
        density: rows.into_iter().map(|r| r.density).collect(),
        taus: taus.taus().to_vec(),
        sample_angles: sample.iter().map(cartesian_to_circular).collect(),
        selector_marks,
    })
}

/// Lambert azimuthal equal-area coordinates of `x` on the disk of its
/// hemisphere (radius `sqrt 2`). Returns `(north, X, Y)`; the equator goes north.
pub fn lambert_project(x: &[f64]) -> (bool, f64, f64) {
    let north = x[2] >= 0.0;
    let s = (2.0 / (1.0 + x[2].abs())).sqrt();
    (north, s * x[0], s * x[1])
}

/// Inverse of [`lambert_project`]; `None` outside the disk.
pub fn lambert_unproject(north: bool, px: f64, py: f64) -> Option<[f64; 3]> {
    let rho = px.hypot(py);
    if rho > SQRT_2 {
        return None;
    }
    // colatitude from the hemisphere's pole
    let c = 2.0 * (rho / 2.0).asin();
    let theta = py.atan2(px);
    let z = c.cos();
    Some([c.sin() * theta.cos(), c.sin() * theta.sin(), if north { z } else { -z }])
}

/// Cell centers along one axis of a `resolution`-cell raster over `[-sqrt 2, sqrt 2]`.
pub fn disk_axis(resolution: usize) -> Vec<f64> {
    let w = 2.0 * SQRT_2 / resolution as f64;
    (0..resolution).map(|i| -SQRT_2 + (i as f64 + 0.5) * w).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub index: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SclusterFrame {
    pub h: f64,
    pub inv_h2: f64,
    /// `north[row][col]` with row following y and col following x; `None` outside the disk.
    pub north: Vec<Vec<Option<f64>>>,
    pub south: Vec<Vec<Option<f64>>>,
    pub sample_north: Vec<DiskPoint>,
    pub sample_south: Vec<DiskPoint>,
    pub thresholds: Vec<f64>,
}

fn raster(model: &DensityModel, axis: &[f64], north: bool) -> Vec<Vec<Option<f64>>> {
    axis.par_iter()
        .map(|&y| {
            axis.iter()
                .map(|&x| lambert_unproject(north, x, y).map(|p| model.density_raw(&p)))
                .collect()
        })
        .collect()
}

pub fn scluster_frame(sample: &Sample, h: f64, resolution: usize, taus: &TauGrid) -> Result<SclusterFrame> {
    require_dim(sample, 3)?;
    check_resolution(resolution)?;
    let model = DensityModel::kde(sample.clone(), h)?;
    let axis = disk_axis(resolution);
    let (mut sample_north, mut sample_south) = (Vec::new(), Vec::new());
    for (index, p) in sample.iter().enumerate() {
        let (north, x, y) = lambert_project(p);
        let dp = DiskPoint { index, x, y };
        if north {
            sample_north.push(dp);
        } else {
            sample_south.push(dp);
        }
    }
    let levels = levels_from_densities(&model.densities(sample)?, taus)?;
    Ok(SclusterFrame {
        h,
        inv_h2: model.as_kde().map_or(0.0, |k| k.kappa()),
        north: raster(&model, &axis, true),
        south: raster(&model, &axis, false),
        sample_north,
        sample_south,
        thresholds: levels.iter().map(|l| l.threshold).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SclusterDoc {
    pub resolution: usize,
    /// Cell-center coordinates shared by both raster axes.
    pub axis: Vec<f64>,
    pub taus: Vec<f64>,
    /// Selector id to its bandwidth; each also has a frame.
    pub selector_marks: BTreeMap<String, f64>,
    /// Ordered by increasing `h`.
    pub frames: Vec<SclusterFrame>,
}

/// One frame per bandwidth in `h_list` plus one per selector, ordered by `h`.
pub fn export_scluster(
    sample: &Sample,
    h_list: &[f64],
    resolution: usize,
    selectors: &[Selector],
    taus: &TauGrid,
    range: SearchRange,
) -> Result<SclusterDoc> {
    require_dim(sample, 3)?;
    check_resolution(resolution)?;
    let selector_marks = selector_bandwidths(sample, selectors, range)?;
    let mut hs: Vec<f64> = h_list.iter().chain(selector_marks.values()).copied().collect();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    let frames = hs
        .iter()
        .map(|&h| scluster_frame(sample, h, resolution, taus))
        .collect::<Result<Vec<_>>>()?;
    Ok(SclusterDoc { resolution, axis: disk_axis(resolution), taus: taus.taus().to_vec(), selector_marks, frames })
}

/// Cluster tree at one bandwidth together with its mode function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub h: f64,
    pub tree: TreeExport,
    pub mode_function: Vec<Breakpoint>,
    pub levels: Vec<Level>,
    /// Antipodal vertex pairs joined by a zero-weight edge.
    pub antipodal_pairs: usize,
}

pub fn tree_document(f: &Filtration) -> TreeDoc {
    TreeDoc {
        h: f.h,
        tree: f.tree.to_export(),
        mode_function: f.mode_function.breakpoints().to_vec(),
        levels: f.levels.clone(),
        antipodal_pairs: f.antipodal_pairs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresDoc {
    pub h: f64,
    pub cores: CoreAssignment,
}
