//! Nodal sets and mountain-pass geometry.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ChoquardProblem;
use crate::error::{Error, Result};
use crate::grid::{FieldFunction, ReducedGrid};

/// Whether `v` takes both signs beyond `1e-9 ‖v‖_∞`, and the angles where
/// its interpolant vanishes between nodes of opposite sign.
pub fn detect_sign_change(grid: &ReducedGrid, v: &FieldFunction) -> Result<(bool, Vec<f64>)> {
    grid.check(v)?;
    Ok(detect_sign_change_vec(grid, v))
}

pub(crate) fn detect_sign_change_vec(grid: &ReducedGrid, v: &FieldFunction) -> (bool, Vec<f64>) {
    let tau = 1e-9 * v.max_abs();
    let max = v.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.values.iter().copied().fold(f64::INFINITY, f64::min);
    let changes = min < -tau && max > tau;
    if !changes {
        return (false, Vec::new());
    }
    let signed: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .zip(&v.values)
        .filter(|(_, x)| x.abs() > tau)
        .map(|(&t, &x)| (t, x))
        .collect();
    let mut roots = Vec::new();
    for pair in signed.windows(2) {
        let ((mut a, fa), (mut b, _)) = (pair[0], pair[1]);
        if fa.signum() == pair[1].1.signum() {
            continue;
        }
        let sa = fa.signum();
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if grid.interpolate(v, m).signum() == sa {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    (true, roots)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MountainPassReport {
    pub ell: usize,
    /// Number of invariant harmonics of degree `≥ ell` on the grid.
    pub tail_dimension: usize,
    pub samples: usize,
    /// Least energy over sampled unit-norm fields in the tail span.
    pub min_tail_energy: f64,
    /// Number of invariant harmonics of degree `< ell`.
    pub head_dimension: usize,
    /// Radius beyond which every sampled direction of the head span has `E ≤ 0`.
    pub blow_down_radius: f64,
    /// `E(2R v) < 0` for every sampled unit head direction `v`.
    pub all_directions_negative: bool,
    pub zero_energy: f64,
}

impl ChoquardProblem {
    /// Samples the energy on the unit sphere of the span of invariant
    /// harmonics of degree `≥ ell` and on rays in the span of degrees `< ell`.
    pub fn mountain_pass_geometry_check(&self, ell: usize, samples: usize, seed: u64) -> Result<MountainPassReport> {
        if ell % 2 == 1 || ell > self.grid.design_degree() {
            return Err(Error::InvalidParams(format!(
                "degree {ell} must be even and at most {}",
                self.grid.design_degree()
            )));
        }
        let size = self.grid.len();
        let modes = self.grid.modes();
        let k0 = ell / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = |v: DVector<f64>| -> DVector<f64> {
            let nv = self.h1(&v, &v).sqrt();
            v / nv
        };

        let mut min_tail = f64::INFINITY;
        for k in k0..size {
            let v = unit(modes.column(k).into_owned());
            min_tail = min_tail.min(self.energy_vec(&v).total);
        }
        for _ in 0..samples {
            let mut v = DVector::zeros(size);
            for k in k0..size {
                let c: f64 = rng.random_range(-1.0..1.0) / (1.0 + (k - k0) as f64);
                v += modes.column(k) * c;
            }
            if v.amax() > 0.0 {
                min_tail = min_tail.min(self.energy_vec(&unit(v)).total);
            }
        }

        let mut radius = 0.0f64;
        let mut negative = true;
        if k0 > 0 {
            let p = self.p;
            for s in 0..samples.max(1) + k0 {
                let mut v = DVector::zeros(size);
                if s < k0 {
                    v += modes.column(s);
                } else {
                    for k in 0..k0 {
                        v += modes.column(k) * rng.random_range(-1.0..1.0);
                    }
                }
                if v.amax() == 0.0 {
                    continue;
                }
                let v = unit(v);
                let b = self.nonlinear(&v).pairing;
                // E(tv) = t²/2 - t^{2p} B/(2p) vanishes at t = (p/B)^{1/(2p-2)}
                let r = (p / b).powf(1.0 / (2.0 * p - 2.0));
                radius = radius.max(r);
                negative &= self.energy_vec(&(&v * (2.0 * r))).total < 0.0;
            }
        }

        let zero = self.energy_vec(&DVector::zeros(size)).total;
        Ok(MountainPassReport {
            ell,
            tail_dimension: size - k0,
            samples,
            min_tail_energy: min_tail,
            head_dimension: k0,
            blow_down_radius: radius,
            all_directions_negative: negative,
            zero_energy: zero,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::problem;
    use super::*;
    use crate::grid::SymmetryClass;
    use std::f64::consts::PI;

    #[test]
    fn sign_change_examples() {
        let pr = problem(3, 2.0, (2, 2), 20);
        let g = pr.grid();
        assert_eq!(detect_sign_change(g, &g.constant(1.0)).unwrap(), (false, vec![]));
        let v = g.from_fn(SymmetryClass::G, |t| (2.0 * t).cos());
        let (changes, roots) = detect_sign_change(g, &v).unwrap();
        assert!(changes);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - PI / 4.0).abs() < 1e-12);
        let w = g.from_fn(SymmetryClass::G, |t| (4.0 * t).cos());
        let (_, roots) = detect_sign_change(g, &w).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - PI / 8.0).abs() < 1e-12 && (roots[1] - 3.0 * PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn mountain_pass_samples() {
        let pr = problem(3, 2.0, (2, 2), 24);
        let r = pr.mountain_pass_geometry_check(4, 50, 7).unwrap();
        assert!(r.min_tail_energy > 0.0);
        assert_eq!(r.head_dimension, 2);
        assert!(r.blow_down_radius.is_finite() && r.all_directions_negative);
        assert_eq!(r.zero_energy, 0.0);
        assert!(pr.mountain_pass_geometry_check(3, 5, 7).is_err());
    }
}
