//! von Mises-Fisher kernel density estimation on S^{d-1}.
//!
//! The estimator at `x` is `(1/n) sum_i C_d(k) exp(k x.X_i)` with `k = 1/h^2`.
//! Sums are accumulated as `exp(k (x.X_i - 1))`, which cannot overflow since
//! `x.X_i <= 1`; when every term underflows the sum is recomputed shifted by
//! the largest dot product.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::special::log_vmf_const_unchecked;
use crate::sphere::{dot, normalize, UnitVector};

/// Smallest partial sum trusted on the fast path.
const FAST_PATH_FLOOR: f64 = 1e-250;

/// Mean direction and concentration of a von Mises-Fisher distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfParams {
    pub mu: UnitVector,
    pub kappa: f64,
}

impl VmfParams {
    pub fn new(mu: UnitVector, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::NonFinite);
        }
        if kappa < 0.0 {
            return Err(Error::InvalidArgument(format!("kappa must be >= 0, got {kappa}")));
        }
        Ok(VmfParams { mu, kappa })
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        log_vmf_const_unchecked(self.dim(), self.kappa) + self.kappa * dot(&self.mu, x)
    }
}

/// Observations on a common sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    points: Vec<UnitVector>,
    dim: usize,
}

impl Sample {
    pub fn new(points: Vec<UnitVector>) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptySample)?.dim();
        Self::with_dim(points, dim)
    }

    /// Allows an empty sample as long as the dimension is known.
    pub fn with_dim(points: Vec<UnitVector>, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDim(dim));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, found: p.dim() });
        }
        Ok(Sample { points, dim })
    }

    /// Normalizes raw rows onto the sphere.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let points = rows.iter().map(|r| normalize(r.as_ref())).collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[UnitVector] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &UnitVector {
        &self.points[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, UnitVector> {
        self.points.iter()
    }

    /// Concatenates samples of equal dimension.
    pub fn concat(parts: &[Sample]) -> Result<Sample> {
        let dim = parts.first().ok_or(Error::EmptySample)?.dim;
        let points = parts.iter().flat_map(|s| s.points.iter().cloned()).collect();
        Sample::with_dim(points, dim)
    }

    /// Subsample by index.
    pub fn select(&self, idx: &[usize]) -> Sample {
        Sample {
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            dim: self.dim,
        }
    }

    /// Norm of the sample mean vector.
    pub fn mean_resultant_length(&self) -> f64 {
        mean_vector(self).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub(crate) fn flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| p.iter().copied()).collect()
    }
}

pub(crate) fn mean_vector(sample: &Sample) -> Vec<f64> {
    let mut m = vec![0.0; sample.dim()];
    for p in sample.iter() {
        for (a, b) in m.iter_mut().zip(p.iter()) {
            *a += b;
        }
    }
    let n = sample.len().max(1) as f64;
    m.iter_mut().for_each(|a| *a /= n);
    m
}

/// A fitted kernel density estimate.
#[derive(Debug, Clone)]
pub struct Kde {
    sample: Sample,
    bandwidth: f64,
    kappa: f64,
    log_c: f64,
    flat: Vec<f64>,
}

impl Kde {
    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Kernel concentration `1/h^2`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn log_kernel_const(&self) -> f64 {
        self.log_c
    }

    fn log_sum(&self, x: &[f64], skip: Option<usize>) -> f64 {
        let d = self.sample.dim;
        let k = self.kappa;
        let mut s = 0.0;
        match d {
            2 => {
                for (i, p) in self.flat.chunks_exact(2).enumerate() {
                    if Some(i) != skip {
                        s += (k * (p[0] * x[0] + p[1] * x[1] - 1.0)).exp();
                    }
                }
            }
            3 => {
                for (i, p) in self.flat.chunks_exact(3).enumerate() {
                    if Some(i) != skip {
                        s += (k * (p[0] * x[0] + p[1] * x[1] + p[2] * x[2] - 1.0)).exp();
                    }
                }
            }
            _ => {
                for (i, p) in self.flat.chunks_exact(d).enumerate() {
                    if Some(i) != skip {
                        s += (k * (dot(p, x) - 1.0)).exp();
                    }
                }
            }
        }
        if s > FAST_PATH_FLOOR {
            return k + s.ln();
        }
        let dots: Vec<f64> = self
            .flat
            .chunks_exact(d)
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, p)| dot(p, x))
            .collect();
        let max = dots.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = dots.iter().map(|v| (k * (v - max)).exp()).sum();
        k * max + s.ln()
    }

    /// Log density at `x`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.log_c + self.log_sum(x, None) - (self.sample.len() as f64).ln()
    }

    fn log_density_loo(&self, i: usize) -> f64 {
        let x = self.sample.points[i].coords();
        self.log_c + self.log_sum(x, Some(i)) - ((self.sample.len() - 1) as f64).ln()
    }
}

/// Finite mixture of vMF densities.
#[derive(Debug, Clone)]
pub struct Mixture {
    components: Vec<(f64, VmfParams)>,
    log_terms: Vec<f64>,
}

impl Mixture {
    pub fn components(&self) -> &[(f64, VmfParams)] {
        &self.components
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let vals: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_terms)
            .map(|((_, p), lt)| lt + p.kappa * dot(&p.mu, x))
            .collect();
        log_sum_exp(&vals)
    }
}

pub(crate) fn log_sum_exp(vals: &[f64]) -> f64 {
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + vals.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Kde(Kde),
    Mixture(Mixture),
}

/// An evaluable density on S^{d-1}.
#[derive(Debug)]
pub struct DensityModel {
    kind: ModelKind,
    dim: usize,
    underflows: AtomicUsize,
}

impl Clone for DensityModel {
    fn clone(&self) -> Self {
        DensityModel {
            kind: self.kind.clone(),
            dim: self.dim,
            underflows: AtomicUsize::new(self.underflows.load(Ordering::Relaxed)),
        }
    }
}

impl DensityModel {
    /// Kernel density estimate with bandwidth `h` (concentration `1/h^2`).
    pub fn kde(sample: Sample, h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::NonFinite);
        }
        if h <= 0.0 {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
        }
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let kappa = 1.0 / (h * h);
        if !kappa.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self::kde_with_kappa(sample, kappa, h))
    }

    /// Kernel density estimate parameterized by concentration; `kappa = 0` is the uniform limit.
    pub fn kde_concentration(sample: Sample, kappa: f64) -> Result<Self> {
        if !kappa.is_finite() {
            return Err(Error::NonFinite);
        }
        if kappa < 0.0 {
            return Err(Error::InvalidArgument(format!("kappa must be >= 0, got {kappa}")));
        }
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        let h = if kappa > 0.0 { kappa.sqrt().recip() } else { f64::INFINITY };
        Ok(Self::kde_with_kappa(sample, kappa, h))
    }

    fn kde_with_kappa(sample: Sample, kappa: f64, h: f64) -> Self {
        let dim = sample.dim();
        let flat = sample.flat();
        DensityModel {
            kind: ModelKind::Kde(Kde {
                log_c: log_vmf_const_unchecked(dim, kappa),
                sample,
                bandwidth: h,
                kappa,
                flat,
            }),
            dim,
            underflows: AtomicUsize::new(0),
        }
    }

    /// Mixture of vMF densities; weights must be positive and sum to one.
    pub fn mixture(components: Vec<(f64, VmfParams)>) -> Result<Self> {
        let dim = components.first().ok_or(Error::EmptySample)?.1.dim();
        if let Some((_, p)) = components.iter().find(|(_, p)| p.dim() != dim) {
            return Err(Error::DimMismatch { expected: dim, found: p.dim() });
        }
        if components.iter().any(|(w, _)| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be positive".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}")));
        }
        let log_terms = components
            .iter()
            .map(|(w, p)| w.ln() + log_vmf_const_unchecked(dim, p.kappa))
            .collect();
        Ok(DensityModel {
            kind: ModelKind::Mixture(Mixture { components, log_terms }),
            dim,
            underflows: AtomicUsize::new(0),
        })
    }

    /// Equal-weight mixture.
    pub fn equal_mixture(params: Vec<VmfParams>) -> Result<Self> {
        let w = 1.0 / params.len().max(1) as f64;
        let mut comps: Vec<(f64, VmfParams)> = params.into_iter().map(|p| (w, p)).collect();
        // absorb rounding so the weights sum to one exactly enough
        let total: f64 = comps.iter().map(|(w, _)| w).sum();
        if let Some(first) = comps.first_mut() {
            first.0 += 1.0 - total;
        }
        Self::mixture(comps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn as_kde(&self) -> Option<&Kde> {
        match &self.kind {
            ModelKind::Kde(k) => Some(k),
            ModelKind::Mixture(_) => None,
        }
    }

    /// How many evaluations were clamped to the smallest positive normal.
    pub fn underflow_count(&self) -> usize {
        self.underflows.load(Ordering::Relaxed)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    /// Log density; finite for every finite concentration.
    pub fn log_density(&self, x: &UnitVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.log_density_raw(x))
    }

    pub(crate) fn log_density_raw(&self, x: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::Kde(k) => k.log_density(x),
            ModelKind::Mixture(m) => m.log_density(x),
        }
    }

    fn clamp(&self, log_value: f64) -> f64 {
        let v = log_value.exp();
        if v < f64::MIN_POSITIVE {
            self.underflows.fetch_add(1, Ordering::Relaxed);
            f64::MIN_POSITIVE
        } else {
            v
        }
    }

    /// Density with respect to surface measure. Never exactly zero.
    pub fn density(&self, x: &UnitVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.density_raw(x))
    }

    pub(crate) fn density_raw(&self, x: &[f64]) -> f64 {
        self.clamp(self.log_density_raw(x))
    }

    /// Leave-one-out estimate at the `i`-th fitting point.
    pub fn density_loo(&self, i: usize) -> Result<f64> {
        Ok(self.clamp(self.log_density_loo(i)?))
    }

    pub fn log_density_loo(&self, i: usize) -> Result<f64> {
        let kde = self
            .as_kde()
            .ok_or_else(|| Error::InvalidArgument("leave-one-out requires a kernel estimate".into()))?;
        let n = kde.sample.len();
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        Ok(kde.log_density_loo(i))
    }

    /// Densities at every point of `sample`, evaluated in parallel.
    pub fn densities(&self, sample: &Sample) -> Result<Vec<f64>> {
        if sample.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: sample.dim() });
        }
        Ok(sample.points().par_iter().map(|p| self.density_raw(p)).collect())
    }
}

/// Draws `n` points from a vMF distribution, deterministically for a given seed.
pub fn sample_vmf(params: &VmfParams, n: usize, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_vmf_with(params, n, &mut rng)
}

/// Wood's rejection sampler for the component along the mean direction,
/// combined with a uniform direction in the tangent space.
pub fn sample_vmf_with<R: Rng + ?Sized>(params: &VmfParams, n: usize, rng: &mut R) -> Sample {
    let d = params.dim();
    let m = (d - 1) as f64;
    let kappa = params.kappa;
    // b = (-2k + sqrt(4k^2 + m^2)) / m, written to avoid cancellation for large k
    let b = m / (2.0 * kappa + (4.0 * kappa * kappa + m * m).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * m, 0.5 * m).expect("valid beta parameters");
    let mu = params.mu.coords();

    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let w = loop {
            let z: f64 = beta.sample(rng);
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            let u: f64 = rng.random();
            if kappa * w + m * (1.0 - x0 * w).ln() - c >= u.ln() {
                break w;
            }
        };
        let v = tangent_direction(mu, rng);
        let s = (1.0 - w * w).max(0.0).sqrt();
        let x: Vec<f64> = mu.iter().zip(&v).map(|(a, t)| w * a + s * t).collect();
        points.push(normalize(&x).expect("vMF draw has unit norm"));
    }
    Sample::with_dim(points, d).expect("homogeneous dimension")
}

/// Uniform unit vector orthogonal to `mu`.
fn tangent_direction<R: Rng + ?Sized>(mu: &[f64], rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..mu.len()).map(|_| rng.sample(StandardNormal)).collect();
        let proj = dot(&g, mu);
        let t: Vec<f64> = g.iter().zip(mu).map(|(a, m)| a - proj * m).collect();
        let n = dot(&t, &t).sqrt();
        if n > 1e-12 {
            return t.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Numerical integral of the density over S^1 (`resolution` equispaced
/// angles) or S^2 (`resolution` polar by `2 * resolution` azimuthal cells,
/// midpoint rule with `sin(phi)` weights).
pub fn integrate_density(model: &DensityModel, resolution: usize) -> Result<f64> {
    let res = resolution.max(1);
    match model.dim() {
        2 => {
            let step = 2.0 * PI / res as f64;
            let total: f64 = (0..res)
                .into_par_iter()
                .map(|i| {
                    let t = i as f64 * step;
                    model.density_raw(&[t.cos(), t.sin()])
                })
                .sum();
            Ok(total * step)
        }
        3 => {
            let dphi = PI / res as f64;
            let n_theta = 2 * res;
            let dtheta = 2.0 * PI / n_theta as f64;
            let total: f64 = (0..res)
                .into_par_iter()
                .map(|i| {
                    let phi = (i as f64 + 0.5) * dphi;
                    let (sp, cp) = phi.sin_cos();
                    let row: f64 = (0..n_theta)
                        .map(|j| {
                            let (st, ct) = (j as f64 * dtheta).sin_cos();
                            model.density_raw(&[sp * ct, sp * st, cp])
                        })
                        .sum();
                    row * sp
                })
                .sum();
            Ok(total * dphi * dtheta)
        }
        d => Err(Error::UnsupportedDim(d)),
    }
}
