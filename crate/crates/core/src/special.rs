//! Log-scale modified Bessel functions of the first kind and the von
//! Mises-Fisher normalizing constant built on them.
//!
//! `I_nu(x)` overflows a double for `x` around 700, while kernel concentrations
//! `1/h^2` routinely reach 10^4 and beyond, so everything here works with
//! `ln I_nu(x)` directly:
//!
//! * small and moderate `x`: the power series, whose terms are all positive
//!   and therefore free of cancellation; it is rescaled on the fly so that
//!   partial sums never overflow;
//! * `x` large compared to `nu^2`: the Hankel large-argument expansion;
//! * `x` and `nu` both large: Debye's uniform expansion in `nu`.

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const HANKEL_MIN_X: f64 = 30.0;
const SERIES_MAX_X: f64 = 5000.0;
const RESCALE: f64 = 1e280;

/// `ln I_nu(x)` for `nu >= 0`, `x >= 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    debug_assert!(nu >= 0.0 && x >= 0.0, "nu = {nu}, x = {x}");
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if hankel_ok(nu, x) {
        x - 0.5 * (LN_2PI + x.ln()) + hankel_sum(nu, x).ln()
    } else if x <= SERIES_MAX_X || nu < 50.0 {
        log_series(nu, x)
    } else {
        log_debye(nu, x)
    }
}

fn hankel_ok(nu: f64, x: f64) -> bool {
    x >= HANKEL_MIN_X && x >= 2.0 * nu * nu
}

fn log_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut log_scale = 0.0f64;
    let mut k = 0.0f64;
    loop {
        k += 1.0;
        term *= q / (k * (nu + k));
        sum += term;
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            log_scale += RESCALE.ln();
        }
        // Terms grow until k ~ x/2 and then decay geometrically.
        if term < sum * 1e-17 && k > 0.5 * x {
            break;
        }
        if k > 1e6 {
            break;
        }
    }
    nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + sum.ln() + log_scale
}

/// `sum_k (-1)^k a_k(nu) / x^k`, truncated at the smallest term.
fn hankel_sum(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() >= term.abs() && k > 1 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn log_debye(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let root = (1.0 + z * z).sqrt();
    let t = 1.0 / root;
    let eta = root + (z / (1.0 + root)).ln();
    let t2 = t * t;
    let u1 = t * (3.0 - 5.0 * t2) / 24.0;
    let u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0;
    let u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2 - 425425.0 * t2 * t2 * t2) / 414720.0;
    let t4 = t2 * t2;
    let u4 = t4
        * (4465125.0 - 94121676.0 * t2 + 349922430.0 * t4 - 446185740.0 * t4 * t2 + 185910725.0 * t4 * t4)
        / 39813120.0;
    let corr = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / nu.powi(3) + u4 / nu.powi(4);
    nu * eta - 0.5 * (LN_2PI + nu.ln()) + 0.5 * t.ln() + corr.ln()
}

/// `I_{nu+1}(x) / I_nu(x)`, accurate also when the ratio is close to 1.
pub fn bessel_i_ratio(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if hankel_ok(nu + 1.0, x) {
        // common exp(x)/sqrt(2 pi x) factor cancels
        hankel_sum(nu + 1.0, x) / hankel_sum(nu, x)
    } else {
        (log_bessel_i(nu + 1.0, x) - log_bessel_i(nu, x)).exp()
    }
}

/// Surface area of S^{d-1} on the log scale: `ln(2 pi^{d/2} / Gamma(d/2))`.
pub fn log_sphere_area(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    LN_2 + h * PI.ln() - ln_gamma(h)
}

/// `ln(sinh x)` for `x > 0` without overflow.
pub(crate) fn log_sinh(x: f64) -> f64 {
    if x < 1.0 {
        x.sinh().ln()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - LN_2
    }
}

/// Logarithm of the von Mises-Fisher normalizing constant
/// `C_d(k) = k^{d/2-1} / ((2 pi)^{d/2} I_{d/2-1}(k))` on S^{d-1}.
pub fn log_vmf_const(d: usize, kappa: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidDim(d));
    }
    if !kappa.is_finite() {
        return Err(Error::NonFinite);
    }
    if kappa < 0.0 {
        return Err(Error::InvalidArgument(format!("kappa must be >= 0, got {kappa}")));
    }
    Ok(log_vmf_const_unchecked(d, kappa))
}

pub(crate) fn log_vmf_const_unchecked(d: usize, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return -log_sphere_area(d);
    }
    match d {
        3 => kappa.ln() - (4.0 * PI).ln() - log_sinh(kappa),
        _ => {
            let nu = 0.5 * d as f64 - 1.0;
            if kappa < 1e-8 {
                // I_nu(k) ~ (k/2)^nu / Gamma(nu + 1): the constant tends to 1/area
                return -log_sphere_area(d) - kappa * kappa / (4.0 * (nu + 1.0));
            }
            nu * kappa.ln() - 0.5 * d as f64 * (2.0 * PI).ln() - log_bessel_i(nu, kappa)
        }
    }
}
