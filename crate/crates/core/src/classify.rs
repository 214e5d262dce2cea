//! Allocation of points outside the cluster cores by per-core density
//! estimates, fitted once on the cores (block allocation).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{resolve, BandwidthChoice, SearchRange};
use crate::density::{DensityModel, Sample};
use crate::error::{Error, Result};
use crate::labeling::Labeling;
use crate::sphere::dot;
use crate::tree::CoreAssignment;

/// Bandwidth of the per-core estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupBandwidth {
    /// The bandwidth of the global estimate.
    Shared(f64),
    /// Chosen separately on each core.
    PerGroup(BandwidthChoice, SearchRange),
}

#[derive(Debug, Clone)]
pub struct GroupDensities {
    models: Vec<DensityModel>,
    members: Vec<Vec<usize>>,
}

impl GroupDensities {
    pub fn fit(cores: &CoreAssignment, sample: &Sample, bandwidth: GroupBandwidth) -> Result<Self> {
        if cores.labels.len() != sample.len() {
            return Err(Error::LengthMismatch(cores.labels.len(), sample.len()));
        }
        let members: Vec<Vec<usize>> = (1..=cores.n_c).map(|j| cores.core_members(j)).collect();
        if let Some(j) = members.iter().position(Vec::is_empty) {
            return Err(Error::EmptyCore(j + 1));
        }
        let models = members
            .iter()
            .map(|m| {
                let core = sample.select(m);
                let h = match bandwidth {
                    GroupBandwidth::Shared(h) => h,
                    GroupBandwidth::PerGroup(choice, range) => resolve(&core, choice, range)?,
                };
                DensityModel::kde(core, h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupDensities { models, members })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[DensityModel] {
        &self.models
    }

    pub fn log_densities(&self, x: &[f64]) -> Vec<f64> {
        self.models.iter().map(|m| m.log_density_raw(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub labeling: Labeling,
    /// Set when there was a single core and every point got label 1.
    pub single_group: bool,
    /// Points whose group densities all underflowed, labeled by the nearest core member.
    pub fallback_count: usize,
}

/// Index of the maximum, lowest index on ties.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = j;
        }
    }
    best
}

/// Group maximizing `log f_j - max_{i != j} log f_i`.
fn ratio_argmax(logs: &[f64]) -> usize {
    let scores: Vec<f64> = (0..logs.len())
        .map(|j| {
            let other = logs
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &v)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            logs[j] - other
        })
        .collect();
    argmax(&scores)
}

pub fn classify(cores: &CoreAssignment, sample: &Sample, h: f64) -> Result<Classification> {
    classify_with(cores, sample, GroupBandwidth::Shared(h))
}

/// Core members keep their labels; every other point goes to the group with
/// the largest density ratio, which is the group with the largest density.
pub fn classify_with(cores: &CoreAssignment, sample: &Sample, bandwidth: GroupBandwidth) -> Result<Classification> {
    if cores.labels.len() != sample.len() {
        return Err(Error::LengthMismatch(cores.labels.len(), sample.len()));
    }
    if cores.n_c == 1 {
        if cores.labels.iter().all(Option::is_none) {
            return Err(Error::EmptyCore(1));
        }
        return Ok(Classification {
            labeling: Labeling::with_groups(vec![1; sample.len()], 1)?,
            single_group: true,
            fallback_count: 0,
        });
    }
    let groups = GroupDensities::fit(cores, sample, bandwidth)?;
    let floor = f64::MIN_POSITIVE.ln();
    let assigned: Vec<(usize, bool)> = (0..sample.len())
        .into_par_iter()
        .map(|i| {
            if let Some(l) = cores.labels[i] {
                return (l, false);
            }
            let x = sample.get(i).coords();
            let logs = groups.log_densities(x);
            if logs.iter().all(|v| !v.is_finite() || *v < floor) {
                return (nearest_core(&groups, sample, x) + 1, true);
            }
            let j = argmax(&logs);
            debug_assert_eq!(j, ratio_argmax(&logs));
            (j + 1, false)
        })
        .collect();
    let fallback_count = assigned.iter().filter(|a| a.1).count();
    Ok(Classification {
        labeling: Labeling::with_groups(assigned.into_iter().map(|a| a.0).collect(), cores.n_c)?,
        single_group: false,
        fallback_count,
    })
}

/// Group of the core member closest in geodesic distance.
fn nearest_core(groups: &GroupDensities, sample: &Sample, x: &[f64]) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (j, m) in groups.members.iter().enumerate() {
        for &i in m {
            let c = dot(x, sample.get(i).coords());
            if c > best.0 {
                best = (c, j);
            }
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{sample_vmf, VmfParams};
    use crate::sphere::circular_to_cartesian;

    fn assignment(labels: Vec<Option<usize>>, n_c: usize) -> CoreAssignment {
        CoreAssignment { n_c, core_level: 0.0, core_tau: 0.5, labels }
    }

    #[test]
    fn single_core_labels_everything_one() {
        let s = Sample::new((0..5).map(|i| circular_to_cartesian(i as f64)).collect()).unwrap();
        let c = classify(&assignment(vec![Some(1), None, None, None, None], 1), &s, 0.3).unwrap();
        assert!(c.single_group);
        assert_eq!(c.labeling.labels(), &[1, 1, 1, 1, 1]);
    }

    #[test]
    fn mirror_midpoint_ties_to_group_one() {
        let angles = [-0.5, -0.7, 0.5, 0.7, 0.0];
        let s = Sample::new(angles.iter().map(|&a| circular_to_cartesian(a)).collect()).unwrap();
        let cores = assignment(vec![Some(1), Some(1), Some(2), Some(2), None], 2);
        let g = GroupDensities::fit(&cores, &s, GroupBandwidth::Shared(0.4)).unwrap();
        let l = g.log_densities(s.get(4));
        assert_eq!(l[0], l[1]);
        assert_eq!(classify(&cores, &s, 0.4).unwrap().labeling.labels()[4], 1);
    }

    fn two_group() -> (Sample, CoreAssignment) {
        let mus = [0.0, 2.0 * std::f64::consts::PI / 3.0];
        let parts: Vec<Sample> = mus
            .iter()
            .enumerate()
            .map(|(i, &m)| sample_vmf(&VmfParams::new(circular_to_cartesian(m), 10.0).unwrap(), 40, 11 + i as u64))
            .collect();
        let s = Sample::concat(&parts).unwrap();
        // the ten points closest to each mean form the cores
        let mut labels = vec![None; s.len()];
        for (j, &m) in mus.iter().enumerate() {
            let t = circular_to_cartesian(m);
            let mut idx: Vec<usize> = (j * 40..(j + 1) * 40).collect();
            idx.sort_by(|&a, &b| s.get(b).dot(&t).total_cmp(&s.get(a).dot(&t)));
            idx[..10].iter().for_each(|&i| labels[i] = Some(j + 1));
        }
        (s, assignment(labels, 2))
    }

    #[test]
    fn core_point_goes_to_its_group() {
        let (s, cores) = two_group();
        let member = cores.core_members(2)[0];
        let mut pts: Vec<_> = s.points().to_vec();
        pts.push(s.get(member).clone());
        let s2 = Sample::new(pts).unwrap();
        let mut labels = cores.labels.clone();
        labels.push(None);
        let c = classify(&assignment(labels, 2), &s2, 0.3).unwrap();
        assert_eq!(*c.labeling.labels().last().unwrap(), 2);
        assert_eq!(c.fallback_count, 0);
        for i in 0..s.len() {
            if let Some(l) = cores.labels[i] {
                assert_eq!(c.labeling.labels()[i], l);
            }
        }
    }

    #[test]
    fn order_of_unlabeled_points_does_not_matter() {
        let (s, cores) = two_group();
        let base = classify(&cores, &s, 0.3).unwrap();
        let perm: Vec<usize> = (0..s.len()).rev().collect();
        let ps = s.select(&perm);
        let pc = assignment(perm.iter().map(|&i| cores.labels[i]).collect(), 2);
        let permuted = classify(&pc, &ps, 0.3).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(permuted.labeling.labels()[k], base.labeling.labels()[i]);
        }
    }

    #[test]
    fn underflow_falls_back_to_nearest_member() {
        let angles = [0.0, 0.01, 3.0, 3.01, 1.4];
        let s = Sample::new(angles.iter().map(|&a| circular_to_cartesian(a)).collect()).unwrap();
        let cores = assignment(vec![Some(1), Some(1), Some(2), Some(2), None], 2);
        let c = classify(&cores, &s, 0.01).unwrap();
        assert_eq!(c.fallback_count, 1);
        assert_eq!(c.labeling.labels()[4], 1);
    }

    #[test]
    fn ratio_and_density_argmax_agree() {
        for logs in [vec![1.0, 3.0, 2.0], vec![-5.0, -5.0], vec![0.0, -1.0, 0.0, -2.0]] {
            assert_eq!(argmax(&logs), ratio_argmax(&logs));
        }
    }

    #[test]
    fn errors() {
        let s = Sample::new(vec![circular_to_cartesian(0.0), circular_to_cartesian(1.0)]).unwrap();
        assert_eq!(classify(&assignment(vec![Some(1), None], 2), &s, 0.3), Err(Error::EmptyCore(2)));
        assert!(classify(&assignment(vec![Some(1)], 1), &s, 0.3).is_err());
    }

    #[test]
    fn per_group_bandwidth() {
        let (s, cores) = two_group();
        let bw = GroupBandwidth::PerGroup(BandwidthChoice::Fixed(0.3), crate::bandwidth::DEFAULT_RANGE);
        assert_eq!(classify_with(&cores, &s, bw).unwrap(), classify(&cores, &s, 0.3).unwrap());
    }
}
