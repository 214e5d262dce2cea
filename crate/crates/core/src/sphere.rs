//! Points on the unit hypersphere S^{d-1} and the few geometric operations the
//! clustering pipeline needs: normalization, geodesic distance, great-circle
//! interpolation and angle conversions.
//!
//! Angle convention on S^2 is `(theta, phi)` with `theta` the azimuth and `phi`
//! the polar angle measured from the north pole:
//! `x = (sin phi cos theta, sin phi sin theta, cos phi)`.

use std::f64::consts::PI;
use std::ops::Deref;

use crate::error::{Error, Result};

const ZERO_NORM: f64 = 1e-300;
pub(crate) const ANTIPODAL_TOL: f64 = 1e-9;
const UNIT_TOL: f64 = 4.0 * f64::EPSILON;

/// A point on S^{d-1}, d >= 2.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector(self.0.iter().map(|x| -x).collect())
    }
}

impl Deref for UnitVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Projects a raw vector onto the sphere.
pub fn normalize(v: &[f64]) -> Result<UnitVector> {
    if v.len() < 2 {
        return Err(Error::InvalidDim(v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    // Inputs already on the sphere are returned untouched so the operation is idempotent.
    let n0 = norm(v);
    if (n0 - 1.0).abs() <= UNIT_TOL {
        return Ok(UnitVector(v.to_vec()));
    }
    // Scale first so that tiny or huge components do not under/overflow the norm.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale < ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    let scaled: Vec<f64> = v.iter().map(|x| x / scale).collect();
    let n = norm(&scaled);
    let out: Vec<f64> = scaled.iter().map(|x| x / n).collect();
    Ok(UnitVector(out))
}

fn check_dims(a: &UnitVector, b: &UnitVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Great-circle distance in radians, in `[0, pi]`.
pub fn geodesic_distance(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    check_dims(a, b)?;
    Ok(angle_from_dot(a.dot(b)))
}

#[inline]
pub(crate) fn angle_from_dot(d: f64) -> f64 {
    d.clamp(-1.0, 1.0).acos()
}

/// Points along the minor arc from `a` to `b`, no more than `step` radians
/// apart, always including both endpoints.
pub fn geodesic_points(a: &UnitVector, b: &UnitVector, step: f64) -> Result<Vec<UnitVector>> {
    check_dims(a, b)?;
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let cos = a.dot(b);
    if 1.0 + cos < ANTIPODAL_TOL {
        return Err(Error::Antipodal);
    }
    let theta = angle_from_dot(cos);
    let segments = (theta / step).ceil().max(1.0) as usize;
    Ok(slerp_segments(a, b, theta, segments))
}

/// Splits the arc into `segments` equal pieces. The caller has already ruled
/// out antipodal endpoints.
pub(crate) fn slerp_segments(a: &UnitVector, b: &UnitVector, theta: f64, segments: usize) -> Vec<UnitVector> {
    let segments = segments.max(1);
    let mut out = Vec::with_capacity(segments + 1);
    out.push(a.clone());
    if segments > 1 && theta > 0.0 {
        let sin_theta = theta.sin();
        for s in 1..segments {
            let t = s as f64 / segments as f64;
            let wa = ((1.0 - t) * theta).sin() / sin_theta;
            let wb = (t * theta).sin() / sin_theta;
            let mut p: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| wa * x + wb * y).collect();
            let n = norm(&p);
            p.iter_mut().for_each(|x| *x /= n);
            out.push(UnitVector(p));
        }
    } else if segments > 1 {
        // coincident endpoints
        out.extend(std::iter::repeat_n(a.clone(), segments - 1));
    }
    out.push(b.clone());
    out
}

/// Angle on S^1 to Cartesian coordinates.
pub fn circular_to_cartesian(theta: f64) -> UnitVector {
    UnitVector(vec![theta.cos(), theta.sin()])
}

/// Cartesian point on S^1 to an angle in `[0, 2 pi)`.
pub fn cartesian_to_circular(x: &UnitVector) -> f64 {
    let a = x[1].atan2(x[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Hyperspherical angles `(theta, phi_1, .., phi_{d-2})` to a point on
/// S^{d-1}. For d = 2 this is the circle, for d = 3 the convention described
/// at the top of this module.
pub fn spherical_to_cartesian(angles: &[f64]) -> Result<UnitVector> {
    if angles.is_empty() {
        return Err(Error::InvalidDim(angles.len() + 1));
    }
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite);
    }
    let d = angles.len() + 1;
    let theta = angles[0];
    let polar = &angles[1..];
    let mut x = vec![0.0; d];
    // Product of sines of all polar angles with index >= k.
    let mut tail = vec![1.0; polar.len() + 1];
    for k in (0..polar.len()).rev() {
        tail[k] = tail[k + 1] * polar[k].sin();
    }
    x[0] = theta.cos() * tail[0];
    x[1] = theta.sin() * tail[0];
    for (k, phi) in polar.iter().enumerate() {
        x[k + 2] = phi.cos() * tail[k + 1];
    }
    normalize(&x)
}

/// Inverse of [`spherical_to_cartesian`]; azimuth in `[0, 2 pi)`, polar angles in `[0, pi]`.
pub fn cartesian_to_spherical(x: &UnitVector) -> Vec<f64> {
    let d = x.dim();
    let mut angles = vec![0.0; d - 1];
    let mut rest = 1.0f64;
    // Peel off the last coordinate first.
    for k in (2..d).rev() {
        let c = (x[k] / rest.max(f64::MIN_POSITIVE)).clamp(-1.0, 1.0);
        let phi = c.acos();
        angles[k - 1] = phi;
        rest *= phi.sin();
    }
    let mut theta = x[1].atan2(x[0]);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    angles[0] = theta;
    angles
}

/// Longitude/latitude in degrees to a point on S^2 (longitude is the azimuth,
/// latitude is measured from the equator).
pub fn lonlat_to_cartesian(lon_deg: f64, lat_deg: f64) -> Result<UnitVector> {
    let theta = lon_deg.to_radians();
    let phi = PI / 2.0 - lat_deg.to_radians();
    spherical_to_cartesian(&[theta, phi])
}
