//! Bandwidth selectors for the vMF kernel estimator.
//!
//! * `RotCircular`: Taylor's circular rule of thumb (d = 2 only).
//! * `RotHypersphere`: the vMF-reference rule of thumb for S^{q}, q = d - 1.
//! * `Lcv`: likelihood cross-validation (maximized).
//! * `Lscv`: least-squares cross-validation (minimized), using the closed form
//!   `int f_n^2 = n^-2 sum_{i,j} C_d(k)^2 / C_d(k |X_i + X_j|)`.
//!
//! The cross-validation criteria are optimized by [`optimize_1d`]: a coarse
//! 25-point scan on a log grid followed by golden-section refinement.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Sample;
use crate::error::{Error, Result};
use crate::special::{bessel_i_ratio, log_bessel_i, log_vmf_const_unchecked};

pub const DEFAULT_RANGE: SearchRange = SearchRange { lo: 0.02, hi: 5.0 };

const GRID_POINTS: usize = 25;
const REL_TOL: f64 = 1e-4;
const MAX_ITER: usize = 100;
const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Selector {
    #[serde(rename = "rot-circ")]
    RotCircular,
    #[serde(rename = "lcv")]
    Lcv,
    #[serde(rename = "lscv")]
    Lscv,
    #[serde(rename = "rot-hyper")]
    RotHypersphere,
}

impl Selector {
    pub const ALL: [Selector; 4] = [Selector::RotCircular, Selector::Lcv, Selector::Lscv, Selector::RotHypersphere];

    pub fn id(self) -> &'static str {
        match self {
            Selector::RotCircular => "rot-circ",
            Selector::Lcv => "lcv",
            Selector::Lscv => "lscv",
            Selector::RotHypersphere => "rot-hyper",
        }
    }

    /// Whether the selector is defined for data on S^{d-1}.
    pub fn supports_dim(self, d: usize) -> bool {
        !matches!(self, Selector::RotCircular) || d == 2
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Selector::ALL
            .into_iter()
            .find(|sel| sel.id() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown bandwidth selector '{s}'")))
    }
}

/// Either a data-driven selector or a literal bandwidth. Serialized as its
/// command-line spelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BandwidthChoice {
    Select(Selector),
    Fixed(f64),
}

impl FromStr for BandwidthChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(sel) = s.parse::<Selector>() {
            return Ok(BandwidthChoice::Select(sel));
        }
        match s.parse::<f64>() {
            Ok(h) if h.is_finite() && h > 0.0 => Ok(BandwidthChoice::Fixed(h)),
            _ => Err(Error::InvalidArgument(format!(
                "bandwidth must be one of rot-circ, rot-hyper, lcv, lscv or a positive number, got '{s}'"
            ))),
        }
    }
}

impl TryFrom<String> for BandwidthChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BandwidthChoice> for String {
    fn from(b: BandwidthChoice) -> String {
        b.to_string()
    }
}

impl fmt::Display for BandwidthChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthChoice::Select(s) => write!(f, "{s}"),
            BandwidthChoice::Fixed(h) => write!(f, "{h}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRange {
    pub lo: f64,
    pub hi: f64,
}

impl SearchRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid bandwidth range [{lo}, {hi}]")));
        }
        Ok(SearchRange { lo, hi })
    }

    fn clamp(&self, h: f64) -> (f64, bool) {
        if !(h >= self.lo) {
            (self.lo, false)
        } else if h > self.hi {
            (self.hi, false)
        } else {
            (h, true)
        }
    }
}

impl Default for SearchRange {
    fn default() -> Self {
        DEFAULT_RANGE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthResult {
    pub h: f64,
    pub selector: Selector,
    /// Criterion value at the optimum. Rule-of-thumb selectors report the
    /// fitted reference concentration instead.
    pub score: f64,
    pub search_range: SearchRange,
    pub converged: bool,
    /// Set when the requested selector could not be applied and another one
    /// produced `h`.
    pub fallback: Option<Selector>,
}

/// Maximum likelihood vMF concentration: solves `A_d(k) = R` where `R` is the
/// mean resultant length and `A_d = I_{d/2} / I_{d/2-1}`.
pub fn estimate_vmf_concentration(sample: &Sample) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: sample.len() });
    }
    let r = sample.mean_resultant_length();
    if r > 1.0 - 1e-12 {
        return Err(Error::Degenerate("all points identical"));
    }
    if r < 1e-15 {
        return Ok(0.0);
    }
    let d = sample.dim() as f64;
    let nu = 0.5 * d - 1.0;
    let a = |k: f64| bessel_i_ratio(nu, k);
    let guess = r * (d - r * r) / (1.0 - r * r);
    let (mut lo, mut hi) = (guess, guess);
    while a(lo) > r {
        lo *= 0.5;
    }
    while a(hi) < r {
        hi *= 2.0;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-10 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if a(mid) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smoothing concentration of the circular rule of thumb given a reference
/// concentration `kappa` and sample size `n`:
/// `[3 n k^2 I_2(2k) / (4 sqrt(pi) I_0(k)^2)]^{2/5}`.
pub fn rot_circular_concentration(kappa: f64, n: usize) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    let log_nu = 0.4
        * (3f64.ln() + (n as f64).ln() + 2.0 * kappa.ln() + log_bessel_i(2.0, 2.0 * kappa)
            - 4f64.ln()
            - 0.5 * PI.ln()
            - 2.0 * log_bessel_i(0.0, kappa));
    log_nu.exp()
}

/// Circular rule-of-thumb bandwidth.
pub fn select_rot_circular(sample: &Sample, range: SearchRange) -> Result<BandwidthResult> {
    if sample.dim() != 2 {
        return Err(Error::WrongDim { expected: 2, found: sample.dim() });
    }
    let kappa = estimate_vmf_concentration(sample)?;
    let nu = rot_circular_concentration(kappa, sample.len());
    let raw = if nu > 0.0 { nu.sqrt().recip() } else { f64::INFINITY };
    let (h, converged) = range.clamp(raw);
    Ok(BandwidthResult {
        h,
        selector: Selector::RotCircular,
        score: kappa,
        search_range: range,
        converged,
        fallback: None,
    })
}

/// Rule-of-thumb bandwidth on S^q (q = d - 1) for reference concentration `kappa`:
/// `[4 sqrt(pi) I_{(q-1)/2}(k)^2 / (k^{(q+1)/2} (2q I_{(q+1)/2}(2k) + (2+q) k I_{(q+3)/2}(2k)) n)]^{1/(4+q)}`.
pub fn rot_hypersphere_bandwidth(kappa: f64, n: usize, d: usize) -> f64 {
    let q = (d - 1) as f64;
    let log_num = 4f64.ln() + 0.5 * PI.ln() + 2.0 * log_bessel_i(0.5 * (q - 1.0), kappa);
    let t1 = (2.0 * q).ln() + log_bessel_i(0.5 * (q + 1.0), 2.0 * kappa);
    let t2 = (2.0 + q).ln() + kappa.ln() + log_bessel_i(0.5 * (q + 3.0), 2.0 * kappa);
    let m = t1.max(t2);
    let log_bracket = m + ((t1 - m).exp() + (t2 - m).exp()).ln();
    let log_den = 0.5 * (q + 1.0) * kappa.ln() + log_bracket + (n as f64).ln();
    ((log_num - log_den) / (4.0 + q)).exp()
}

/// Hypersphere rule-of-thumb bandwidth. Falls back to likelihood
/// cross-validation when the reference concentration is zero.
pub fn select_rot_hypersphere(sample: &Sample, range: SearchRange) -> Result<BandwidthResult> {
    let kappa = estimate_vmf_concentration(sample)?;
    if kappa <= 0.0 {
        let mut res = select_lcv(sample, range)?;
        res.selector = Selector::RotHypersphere;
        res.fallback = Some(Selector::Lcv);
        return Ok(res);
    }
    let raw = rot_hypersphere_bandwidth(kappa, sample.len(), sample.dim());
    let (h, converged) = range.clamp(raw);
    Ok(BandwidthResult {
        h,
        selector: Selector::RotHypersphere,
        score: kappa,
        search_range: range,
        converged,
        fallback: None,
    })
}

/// Per-point `ln sum_{j != i} exp(k X_i.X_j)` over a flattened sample.
fn loo_log_sums(flat: &[f64], d: usize, kappa: f64) -> Vec<f64> {
    let n = flat.len() / d;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &flat[i * d..(i + 1) * d];
            let dot = |j: usize| -> f64 {
                let xj = &flat[j * d..(j + 1) * d];
                xi.iter().zip(xj).map(|(a, b)| a * b).sum()
            };
            let mut s = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                s += (kappa * (dot(j) - 1.0)).exp();
            }
            if s > 1e-250 {
                return kappa + s.ln();
            }
            let max = (0..n).filter(|&j| j != i).map(dot).fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| (kappa * (dot(j) - max)).exp()).sum();
            kappa * max + s.ln()
        })
        .collect()
}

/// Cross-validation criteria for one sample, reusable across bandwidths.
pub struct CvCriteria {
    flat: Vec<f64>,
    d: usize,
    n: usize,
}

impl CvCriteria {
    pub fn new(sample: &Sample) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: sample.len() });
        }
        Ok(CvCriteria {
            flat: sample.flat(),
            d: sample.dim(),
            n: sample.len(),
        })
    }

    fn check_h(h: f64) -> Result<f64> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
        }
        Ok(1.0 / (h * h))
    }

    /// `sum_i ln f_{-i}(X_i)`.
    pub fn lcv(&self, h: f64) -> Result<f64> {
        let kappa = Self::check_h(h)?;
        let log_c = log_vmf_const_unchecked(self.d, kappa);
        let log_m = ((self.n - 1) as f64).ln();
        let sums = loo_log_sums(&self.flat, self.d, kappa);
        Ok(sums.iter().map(|s| log_c + s - log_m).sum())
    }

    /// `int f_n^2` via the vMF product identity.
    pub fn integrated_square(&self, h: f64) -> Result<f64> {
        let kappa = Self::check_h(h)?;
        Ok(integrated_square(&self.flat, self.d, kappa))
    }

    /// `int f_n^2 - (2/n) sum_i f_{-i}(X_i)`.
    pub fn lscv(&self, h: f64) -> Result<f64> {
        let kappa = Self::check_h(h)?;
        let log_c = log_vmf_const_unchecked(self.d, kappa);
        let log_m = ((self.n - 1) as f64).ln();
        let loo: f64 = loo_log_sums(&self.flat, self.d, kappa)
            .iter()
            .map(|s| (log_c + s - log_m).exp())
            .sum();
        Ok(integrated_square(&self.flat, self.d, kappa) - 2.0 * loo / self.n as f64)
    }
}

pub(crate) fn integrated_square(flat: &[f64], d: usize, kappa: f64) -> f64 {
    let n = flat.len() / d;
    let log_c2 = 2.0 * log_vmf_const_unchecked(d, kappa);
    let diag = n as f64 * (log_c2 - log_vmf_const_unchecked(d, 2.0 * kappa)).exp();
    let off: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &flat[i * d..(i + 1) * d];
            let mut row = 0.0;
            for j in (i + 1)..n {
                let xj = &flat[j * d..(j + 1) * d];
                let c: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
                let r = (2.0 + 2.0 * c).max(0.0).sqrt();
                row += (log_c2 - log_vmf_const_unchecked(d, kappa * r)).exp();
            }
            row
        })
        .sum();
    (diag + 2.0 * off) / (n as f64 * n as f64)
}

pub fn lcv_score(sample: &Sample, h: f64) -> Result<f64> {
    CvCriteria::new(sample)?.lcv(h)
}

pub fn lscv_score(sample: &Sample, h: f64) -> Result<f64> {
    CvCriteria::new(sample)?.lscv(h)
}

/// Likelihood cross-validation bandwidth (maximizes [`lcv_score`]).
pub fn select_lcv(sample: &Sample, range: SearchRange) -> Result<BandwidthResult> {
    let cv = CvCriteria::new(sample)?;
    let opt = optimize_1d(|h| cv.lcv(h).unwrap_or(f64::NAN), range, Goal::Maximize)?;
    Ok(BandwidthResult {
        h: opt.h,
        selector: Selector::Lcv,
        score: opt.score,
        search_range: range,
        converged: opt.converged,
        fallback: None,
    })
}

/// Least-squares cross-validation bandwidth (minimizes [`lscv_score`]).
pub fn select_lscv(sample: &Sample, range: SearchRange) -> Result<BandwidthResult> {
    let cv = CvCriteria::new(sample)?;
    let opt = optimize_1d(|h| cv.lscv(h).unwrap_or(f64::NAN), range, Goal::Minimize)?;
    Ok(BandwidthResult {
        h: opt.h,
        selector: Selector::Lscv,
        score: opt.score,
        search_range: range,
        converged: opt.converged,
        fallback: None,
    })
}

/// Runs `selector` on `sample`.
pub fn select(sample: &Sample, selector: Selector, range: SearchRange) -> Result<BandwidthResult> {
    match selector {
        Selector::RotCircular => select_rot_circular(sample, range),
        Selector::RotHypersphere => select_rot_hypersphere(sample, range),
        Selector::Lcv => select_lcv(sample, range),
        Selector::Lscv => select_lscv(sample, range),
    }
}

/// Resolves a bandwidth choice to a number.
pub fn resolve(sample: &Sample, choice: BandwidthChoice, range: SearchRange) -> Result<f64> {
    match choice {
        BandwidthChoice::Fixed(h) => Ok(h),
        BandwidthChoice::Select(sel) => Ok(select(sample, sel, range)?.h),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub h: f64,
    pub score: f64,
    pub converged: bool,
}

/// Log-spaced grid of `count` points over the range, endpoints included.
pub fn log_grid(range: SearchRange, count: usize) -> Vec<f64> {
    let (a, b) = (range.lo.ln(), range.hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                range.lo
            } else if i + 1 == count {
                range.hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// One-dimensional optimization over `h` in `range`: coarse log-grid scan
/// (evaluated concurrently), then golden-section search on `ln h` inside the
/// bracket around the best grid point. An optimum on the range boundary is
/// reported with `converged = false`.
pub fn optimize_1d<F>(score: F, range: SearchRange, goal: Goal) -> Result<Optimum>
where
    F: Fn(f64) -> f64 + Sync,
{
    let range = SearchRange::new(range.lo, range.hi)?;
    let sign = match goal {
        Goal::Maximize => -1.0,
        Goal::Minimize => 1.0,
    };
    let grid = log_grid(range, GRID_POINTS);
    let values: Vec<f64> = grid.par_iter().map(|&h| score(h)).collect();
    if let Some((h, _)) = grid.iter().zip(&values).find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteScore(*h));
    }
    let mut best = 0;
    for i in 1..grid.len() {
        if sign * values[i] < sign * values[best] {
            best = i;
        }
    }
    if best == 0 || best + 1 == grid.len() {
        return Ok(Optimum { h: grid[best], score: values[best], converged: false });
    }

    let objective = |u: f64| -> Result<f64> {
        let v = score(u.exp());
        if v.is_finite() {
            Ok(sign * v)
        } else {
            Err(Error::NonFiniteScore(u.exp()))
        }
    };
    let (mut a, mut b) = (grid[best - 1].ln(), grid[best + 1].ln());
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    let mut best_u = grid[best].ln();
    let mut best_f = sign * values[best];
    for _ in 0..MAX_ITER {
        if (b.exp() - a.exp()) / (0.5 * (a + b)).exp() < REL_TOL {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLDEN * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLDEN * (b - a);
            fd = objective(d)?;
        }
        for (u, f) in [(c, fc), (d, fd)] {
            if f < best_f {
                best_f = f;
                best_u = u;
            }
        }
    }
    Ok(Optimum {
        h: best_u.exp(),
        score: sign * best_f,
        converged: true,
    })
}
