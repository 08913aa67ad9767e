//! Stereographic projection through the south pole, the conformal factors
//! carrying functions between the sphere and flat space, and the chordal
//! distance identity used to lift the Riesz convolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk, tanh_sinh};
use crate::sphere_area;

/// Points closer than this to the south pole (in `1 + xi_{n+1}`) are rejected.
pub const SOUTH_POLE_GUARD: f64 = 1e-13;

/// A unit vector in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    /// Normalises `coords`; fails on the zero vector.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("cannot normalise a zero or non-finite vector".into()));
        }
        Ok(SpherePoint(coords.into_iter().map(|x| x / norm).collect()))
    }

    pub fn north_pole(n: usize) -> Self {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        SpherePoint(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Intrinsic dimension `n` of the sphere the point lives on.
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    /// Last coordinate, the height above the equator.
    pub fn height(&self) -> f64 {
        *self.0.last().unwrap()
    }

    fn check_not_south(&self) -> Result<()> {
        if 1.0 + self.height() < SOUTH_POLE_GUARD {
            return Err(Error::Domain("point is at the south pole".into()));
        }
        Ok(())
    }
}

/// `pi(xi) = (xi_1, ..., xi_n) / (1 + xi_{n+1})`.
pub fn stereo_project(xi: &SpherePoint) -> Result<Vec<f64>> {
    xi.check_not_south()?;
    let n = xi.dim();
    let denom = 1.0 + xi.height();
    Ok(xi.0[..n].iter().map(|x| x / denom).collect())
}

/// `pi^{-1}(x) = (2x, 1 - |x|^2) / (1 + |x|^2)`.
pub fn stereo_inverse(x: &[f64]) -> SpherePoint {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let denom = 1.0 + r2;
    let mut out: Vec<f64> = x.iter().map(|v| 2.0 * v / denom).collect();
    out.push((1.0 - r2) / denom);
    SpherePoint(out)
}

/// Flat-side conformal factor `(2 / (1 + |x|^2))^{(n-2)/2}`.
pub fn plane_factor(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (2.0 / (1.0 + r2)).powf((n - 2.0) / 2.0)
}

/// Sphere-side conformal factor `(1 / (1 + xi_{n+1}))^{(n-2)/2}`.
pub fn sphere_factor(xi: &SpherePoint) -> Result<f64> {
    xi.check_not_south()?;
    let n = xi.dim() as f64;
    Ok((1.0 / (1.0 + xi.height())).powf((n - 2.0) / 2.0))
}

/// Chordal distance `|xi - zeta|` in `R^{n+1}`.
pub fn chordal_distance(xi: &SpherePoint, zeta: &SpherePoint) -> f64 {
    xi.0.iter().zip(&zeta.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `| |pi(xi) - pi(zeta)| - |xi - zeta| / (sqrt(1 + xi_{n+1}) sqrt(1 + zeta_{n+1})) |`.
pub fn chordal_identity_residual(xi: &SpherePoint, zeta: &SpherePoint) -> Result<f64> {
    let px = stereo_project(xi)?;
    let pz = stereo_project(zeta)?;
    let flat = px.iter().zip(&pz).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let lifted = chordal_distance(xi, zeta) / ((1.0 + xi.height()).sqrt() * (1.0 + zeta.height()).sqrt());
    Ok((flat - lifted).abs())
}

/// `(P v)(x) = plane_factor(x) v(pi^{-1}(x))`.
pub fn push_forward(v: impl Fn(&SpherePoint) -> f64, x: &[f64]) -> f64 {
    plane_factor(x) * v(&stereo_inverse(x))
}

/// `(P^{-1} u)(xi) = sphere_factor(xi) u(pi(xi))`.
pub fn pull_back(u: impl Fn(&[f64]) -> f64, xi: &SpherePoint) -> Result<f64> {
    let x = stereo_project(xi)?;
    Ok(sphere_factor(xi)? * u(&x))
}

/// `L^p(R^n)` norm of a radial function `f(r)`.
///
/// Integrates on `[0, R]` adaptively, where `R` is chosen from the decay
/// bound `|f(r)| <= amplitude * (2/(1+r^2))^{(n-2)/2}` that every pushed
/// forward bounded sphere function satisfies, so that the neglected tail is
/// below `1e-10` of the computed integral.
pub fn flat_radial_norm(n: u32, p: f64, amplitude: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let nf = n as f64;
    let area = sphere_area(n - 1);
    let integrand = |r: f64| f(r).abs().powf(p) * r.powf(nf - 1.0);
    // tail bound: amp^p 2^{p(n-2)/2} ∫_R^∞ r^{-p(n-2) + n - 1} dr
    let decay = p * (nf - 2.0) - nf;
    if decay <= 0.0 {
        return Err(Error::Domain(format!("L^{p} norm of a pushed-forward function may diverge in dimension {n}")));
    }
    let tail = |r_max: f64| area * amplitude.powf(p) * 2f64.powf(p * (nf - 2.0) / 2.0) * r_max.powf(-decay) / decay;
    let mut r_max = 16.0;
    let mut body = adaptive_gk(integrand, 0.0, r_max, 1e-13, 0.0)? * area;
    while tail(r_max) > 1e-10 * body {
        let next = r_max * 4.0;
        body += adaptive_gk(integrand, r_max, next, 1e-13, 0.0)? * area;
        r_max = next;
        if r_max > 1e12 {
            return Err(Error::Numerical("radial tail did not decay".into()));
        }
    }
    Ok(body.powf(1.0 / p))
}

/// `L^p(S^n)` norm of a zonal function `v(t)`, `t = xi_{n+1}`.
pub fn sphere_zonal_norm(n: u32, p: f64, v: impl Fn(f64) -> f64) -> Result<f64> {
    let area = sphere_area(n - 1);
    let h = (n as f64 - 2.0) / 2.0;
    let integral = tanh_sinh(|t, om, op| v(t).abs().powf(p) * (om * op).powf(h), 1e-13)?;
    Ok((area * integral).powf(1.0 / p))
}
