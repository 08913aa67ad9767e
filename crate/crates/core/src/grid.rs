//! One-dimensional reduced domain for `O(n_1) x O(n_2)`-invariant functions.
//!
//! An invariant function on `S^n` depends only on `θ ∈ [0, π/2]` with
//! `cos θ = |ξ_{block 1}|`. In the variable `s = cos 2θ` the orbit-volume
//! density becomes the Jacobi weight `(1 - s)^{(n_2-2)/2} (1 + s)^{(n_1-2)/2}`,
//! so Gauss–Jacobi nodes give an exact quadrature for products of
//! polynomials in `s` and barycentric differentiation gives the spectral
//! derivative. Invariant spherical harmonics of degree `2k` are the
//! orthonormal polynomials of degree `k` in `s`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::gauss_jacobi;
use crate::sphere_area;
use crate::symmetry::GroupDescriptor;

pub const MIN_GRID_SIZE: usize = 8;
pub const DEFAULT_GRID_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    /// Invariant under `G = O(n_1) x O(n_2)`.
    G,
    /// `G`-invariant and odd under the block swap.
    Gamma,
}

impl std::str::FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "G" | "g" => Ok(SymmetryClass::G),
            "Gamma" | "gamma" | "GAMMA" => Ok(SymmetryClass::Gamma),
            other => Err(Error::InvalidParams(format!("unknown symmetry class `{other}`"))),
        }
    }
}

impl std::fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SymmetryClass::G => "G",
            SymmetryClass::Gamma => "Gamma",
        })
    }
}

/// Nodal values of an invariant function on a [`ReducedGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFunction {
    pub values: Vec<f64>,
    pub class: SymmetryClass,
}

impl FieldFunction {
    pub fn new(values: Vec<f64>, class: SymmetryClass) -> Self {
        FieldFunction { values, class }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, t: f64) -> FieldFunction {
        FieldFunction::new(self.values.iter().map(|v| v * t).collect(), self.class)
    }

    /// `self + t * other`, keeping the class of `self`.
    pub fn axpy(&self, t: f64, other: &FieldFunction) -> FieldFunction {
        FieldFunction::new(self.values.iter().zip(&other.values).map(|(a, b)| a + t * b).collect(), self.class)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }
}

/// Collocation grid, quadrature and operators on `θ ∈ (0, π/2)`.
#[derive(Debug, Clone)]
pub struct ReducedGrid {
    params: ProblemParams,
    parts: (u32, u32),
    theta: Vec<f64>,
    s: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    d_theta: DMatrix<f64>,
    d_theta2: DMatrix<f64>,
    laplacian: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    modes: DMatrix<f64>,
    rec_a: Vec<f64>,
    rec_b: Vec<f64>,
}

/// Builds the reduced grid with `size` Gauss–Jacobi nodes in `s = cos 2θ`.
pub fn build_grid(params: &ProblemParams, parts: (u32, u32), size: usize) -> Result<ReducedGrid> {
    if size < MIN_GRID_SIZE {
        return Err(Error::InvalidParams(format!("grid size {size} is below the minimum {MIN_GRID_SIZE}")));
    }
    let (n1, n2) = parts;
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidParams(format!("blocks ({n1}, {n2}) must both have size at least 2")));
    }
    GroupDescriptor::for_dimension(vec![n1, n2], params.n())?;

    let alpha = (n2 as f64 - 2.0) / 2.0;
    let beta = (n1 as f64 - 2.0) / 2.0;
    let rule = gauss_jacobi(size, alpha, beta)?;
    let n = params.n();
    let scale = sphere_area(n1 - 1) * sphere_area(n2 - 1) * 2f64.powf(-(n as f64 + 1.0) / 2.0);

    // θ increasing means s decreasing
    let s: Vec<f64> = rule.nodes.iter().rev().copied().collect();
    let weights: Vec<f64> = rule.weights.iter().rev().map(|w| w * scale).collect();
    let theta: Vec<f64> = s.iter().map(|&x| 0.5 * x.clamp(-1.0, 1.0).acos()).collect();

    let bary = barycentric_weights(&s);
    let d_s = differentiation_matrix(&s, &bary);
    let d_s2 = &d_s * &d_s;

    let sin2: Vec<f64> = theta.iter().map(|t| (2.0 * t).sin()).collect();
    let d_theta = DMatrix::from_fn(size, size, |i, j| -2.0 * sin2[i] * d_s[(i, j)]);
    let d_theta2 =
        DMatrix::from_fn(size, size, |i, j| -4.0 * s[i] * d_s[(i, j)] + 4.0 * sin2[i] * sin2[i] * d_s2[(i, j)]);
    let drift: Vec<f64> =
        theta.iter().map(|t| (n2 as f64 - 1.0) / t.tan() - (n1 as f64 - 1.0) * t.tan()).collect();
    let laplacian = DMatrix::from_fn(size, size, |i, j| d_theta2[(i, j)] + drift[i] * d_theta[(i, j)]);

    let w = DMatrix::from_diagonal(&DVector::from_column_slice(&weights));
    let mass = params.mass();
    let mut stiffness = d_theta.transpose() * &w * &d_theta + &w * mass;
    // exact symmetry of the Gram matrix
    stiffness = (&stiffness + stiffness.transpose()) * 0.5;

    let (modes, rec_a, rec_b) = stieltjes(&s, &weights);

    Ok(ReducedGrid {
        params: params.clone(),
        parts,
        theta,
        s,
        weights,
        bary,
        d_theta,
        d_theta2,
        laplacian,
        stiffness,
        modes,
        rec_a,
        rec_b,
    })
}

fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            let prod: f64 = (0..n).filter(|&k| k != j).map(|k| 2.0 * (x[j] - x[k])).product();
            1.0 / prod
        })
        .collect()
}

fn differentiation_matrix(x: &[f64], bary: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (x[i] - x[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Orthonormal polynomials in `s` for the discrete measure `(s_j, w_j)`,
/// obtained by Gram–Schmidt of `s p_{k-1}` against all earlier ones (applied
/// twice), together with their three-term recurrence coefficients.
fn stieltjes(s: &[f64], w: &[f64]) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let n = s.len();
    let mut modes = DMatrix::<f64>::zeros(n, n);
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let inner = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).zip(w).map(|((x, y), z)| x * y * z).sum() };
    let total: f64 = w.iter().sum();
    let p0 = 1.0 / total.sqrt();
    for i in 0..n {
        modes[(i, 0)] = p0;
    }
    for k in 1..n {
        let prev: Vec<f64> = modes.column(k - 1).iter().copied().collect();
        let mut q: Vec<f64> = prev.iter().zip(s).map(|(p, x)| p * x).collect();
        a[k - 1] = inner(&q, &prev);
        for _ in 0..2 {
            for m in 0..k {
                let col: Vec<f64> = modes.column(m).iter().copied().collect();
                let c = inner(&q, &col);
                q.iter_mut().zip(&col).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = inner(&q, &q).sqrt();
        b[k] = norm;
        for i in 0..n {
            modes[(i, k)] = q[i] / norm;
        }
    }
    let last: Vec<f64> = modes.column(n - 1).iter().copied().collect();
    let sl: Vec<f64> = last.iter().zip(s).map(|(p, x)| p * x).collect();
    a[n - 1] = inner(&sl, &last);
    (modes, a, b)
}

impl ReducedGrid {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn parts(&self) -> (u32, u32) {
        self.parts
    }

    pub fn nodes(&self) -> &[f64] {
        &self.theta
    }

    /// `s_j = cos 2θ_j`.
    pub fn s_nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn d_theta(&self) -> &DMatrix<f64> {
        &self.d_theta
    }

    pub fn d_theta2(&self) -> &DMatrix<f64> {
        &self.d_theta2
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Gram matrix of the `H^1` inner product on nodal values.
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Column `k` holds the `L^2`-normalised invariant harmonic of degree `2k`.
    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    /// Largest harmonic degree representable on the grid.
    pub fn design_degree(&self) -> usize {
        2 * (self.len() - 1)
    }

    pub fn has_swap(&self) -> bool {
        self.parts.0 == self.parts.1
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn check(&self, v: &FieldFunction) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::GridMismatch { field: v.len(), grid: self.len() });
        }
        Ok(())
    }

    pub fn constant(&self, c: f64) -> FieldFunction {
        FieldFunction::new(vec![c; self.len()], SymmetryClass::G)
    }

    pub fn from_fn(&self, class: SymmetryClass, f: impl Fn(f64) -> f64) -> FieldFunction {
        FieldFunction::new(self.theta.iter().map(|&t| f(t)).collect(), class)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn l2_inner(&self, u: &FieldFunction, v: &FieldFunction) -> f64 {
        u.values.iter().zip(&v.values).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    pub fn derivative(&self, v: &FieldFunction) -> Vec<f64> {
        (&self.d_theta * v.to_vector()).iter().copied().collect()
    }

    /// `v'' + [(n_2 - 1) cot θ - (n_1 - 1) tan θ] v'` at the nodes.
    pub fn apply_laplacian(&self, v: &FieldFunction) -> Result<FieldFunction> {
        self.check(v)?;
        let out = &self.laplacian * v.to_vector();
        Ok(FieldFunction::new(out.iter().copied().collect(), v.class))
    }

    /// `∫ (u' v' + n(n-2)/4 u v) dV`.
    pub fn h1_inner(&self, u: &FieldFunction, v: &FieldFunction) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.h1_vec(&u.to_vector(), &v.to_vector()))
    }

    /// Same pairing on raw nodal vectors, summed term by term so that
    /// `h1_vec(v, v)` is a sum of nonnegative numbers.
    pub(crate) fn h1_vec(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let du = &self.d_theta * u;
        let dv = &self.d_theta * v;
        let mass = self.params.mass();
        (0..u.len()).map(|i| self.weights[i] * (du[i] * dv[i] + mass * u[i] * v[i])).sum()
    }

    pub fn h1_norm(&self, v: &FieldFunction) -> Result<f64> {
        Ok(self.h1_inner(v, v)?.max(0.0).sqrt())
    }

    /// `‖∇v‖² / ‖v‖²` in `L^2(dV)`.
    pub fn rayleigh_quotient(&self, v: &FieldFunction) -> f64 {
        let dv = self.derivative(v);
        self.integrate(&dv.iter().map(|x| x * x).collect::<Vec<_>>()) / self.l2_inner(v, v)
    }

    /// Expansion coefficients in the orthonormal invariant harmonics.
    pub fn modal_coefficients(&self, v: &FieldFunction) -> Vec<f64> {
        let wv = DVector::from_iterator(self.len(), v.values.iter().zip(&self.weights).map(|(a, w)| a * w));
        (self.modes.transpose() * wv).iter().copied().collect()
    }

    /// Size of the top 15% of modal coefficients relative to the largest one;
    /// small values mean the field is resolved by the grid.
    pub fn resolution_tail(&self, v: &FieldFunction) -> f64 {
        let c = self.modal_coefficients(v);
        let top = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if top == 0.0 {
            return 0.0;
        }
        let start = self.len() - (self.len() * 15).div_ceil(100);
        c[start..].iter().fold(0.0f64, |m, x| m.max(x.abs())) / top
    }

    /// Orthonormal invariant polynomials `p_0..p_{N-1}` evaluated at an arbitrary `s`.
    pub fn eval_modes(&self, s: f64, out: &mut [f64]) {
        let n = out.len().min(self.len());
        if n == 0 {
            return;
        }
        out[0] = self.modes[(0, 0)];
        if n > 1 {
            out[1] = (s - self.rec_a[0]) * out[0] / self.rec_b[1];
        }
        for k in 1..n.saturating_sub(1) {
            out[k + 1] = ((s - self.rec_a[k]) * out[k] - self.rec_b[k] * out[k - 1]) / self.rec_b[k + 1];
        }
    }

    /// The `L^2`-normalised invariant harmonic of degree `degree` together with
    /// its Rayleigh quotient; `None` for odd degrees, where the space is empty.
    pub fn invariant_harmonic(&self, degree: usize) -> Result<Option<(FieldFunction, f64)>> {
        if degree > self.design_degree() {
            return Err(Error::InvalidParams(format!(
                "degree {degree} exceeds the grid design degree {}",
                self.design_degree()
            )));
        }
        if degree % 2 == 1 {
            return Ok(None);
        }
        let k = degree / 2;
        let class = if self.has_swap() && k % 2 == 1 { SymmetryClass::Gamma } else { SymmetryClass::G };
        let mut v = FieldFunction::new(self.modes.column(k).iter().copied().collect(), class);
        // refine: strip leakage into the other eigenspaces of the reduced Laplacian
        let c = self.modal_coefficients(&v);
        for (m, cm) in c.iter().enumerate() {
            if m != k {
                for i in 0..self.len() {
                    v.values[i] -= cm * self.modes[(i, m)];
                }
            }
        }
        let norm = self.l2_inner(&v, &v).sqrt();
        v = v.scaled(1.0 / norm);
        let lambda = self.rayleigh_quotient(&v);
        Ok(Some((v, lambda)))
    }

    /// Exact eigenvalue `ℓ(ℓ + n - 1)` of `-Δ` on degree-`ℓ` harmonics.
    pub fn harmonic_eigenvalue(&self, degree: usize) -> f64 {
        let l = degree as f64;
        l * (l + self.params.n() as f64 - 1.0)
    }

    /// Image under `θ -> π/2 - θ`, which realises the block swap when `n_1 = n_2`.
    pub fn reflect(&self, v: &FieldFunction) -> Result<FieldFunction> {
        self.check(v)?;
        if !self.has_swap() {
            return Err(Error::NotApplicable(format!("blocks {:?} are not exchangeable", self.parts)));
        }
        Ok(FieldFunction::new(v.values.iter().rev().copied().collect(), v.class))
    }

    /// Projection onto the class: `Gamma` fields are made odd under the swap.
    pub fn project(&self, v: &FieldFunction, class: SymmetryClass) -> Result<FieldFunction> {
        self.check(v)?;
        match class {
            SymmetryClass::G => Ok(FieldFunction::new(v.values.clone(), SymmetryClass::G)),
            SymmetryClass::Gamma => {
                let r = self.reflect(v)?;
                Ok(FieldFunction::new(
                    v.values.iter().zip(&r.values).map(|(a, b)| 0.5 * (a - b)).collect(),
                    SymmetryClass::Gamma,
                ))
            }
        }
    }

    /// Barycentric interpolation at an arbitrary angle.
    pub fn interpolate(&self, v: &FieldFunction, theta: f64) -> f64 {
        let x = (2.0 * theta).cos();
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.len() {
            let d = x - self.s[j];
            if d == 0.0 {
                return v.values[j];
            }
            let c = self.bary[j] / d;
            num += c * v.values[j];
            den += c;
        }
        num / den
    }

    /// `(θ_j, w_j)` as CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,weight\n");
        for (t, w) in self.theta.iter().zip(&self.weights) {
            let _ = writeln!(out, "{t:.17e},{w:.17e}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: u32, mu: f64, parts: (u32, u32), size: usize) -> ReducedGrid {
        build_grid(&ProblemParams::new(n, mu).unwrap(), parts, size).unwrap()
    }

    /// `|S^{n1-1}| |S^{n2-1}| ∫_0^{π/2} cos^{n1-1} sin^{n2-1}` via the Beta function.
    fn volume_oracle(n1: u32, n2: u32) -> f64 {
        use statrs::function::gamma::gamma;
        let (a, b) = (n1 as f64 / 2.0, n2 as f64 / 2.0);
        sphere_area(n1 - 1) * sphere_area(n2 - 1) * 0.5 * gamma(a) * gamma(b) / gamma(a + b)
    }

    #[test]
    fn volume_reproduction() {
        for (n, parts) in [(3, (2, 2)), (4, (3, 2)), (5, (3, 3)), (5, (4, 2))] {
            for size in [8, 33, 64] {
                let g = grid(n, 1.0, parts, size);
                let v = g.volume();
                assert!((v - sphere_area(n)).abs() < 1e-10 * sphere_area(n));
                assert!((v - volume_oracle(parts.0, parts.1)).abs() < 1e-10 * v);
            }
        }
        assert!((grid(3, 1.0, (2, 2), 16).volume() - 2.0 * PI * PI).abs() < 1e-10 * 2.0 * PI * PI);
        assert!((grid(4, 1.0, (3, 2), 16).volume() - 8.0 * PI * PI / 3.0).abs() < 1e-10 * 8.0 * PI * PI / 3.0);
    }

    #[test]
    fn nodes_are_interior_and_increasing() {
        let g = grid(4, 1.0, (3, 2), 20);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes()[0] > 0.0 && *g.nodes().last().unwrap() < PI / 2.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = ProblemParams::new(3, 1.0).unwrap();
        assert!(build_grid(&p, (2, 2), 7).is_err());
        assert!(build_grid(&p, (3, 2), 16).is_err());
        let p4 = ProblemParams::new(4, 1.0).unwrap();
        assert!(build_grid(&p4, (4, 1), 16).is_err());
    }

    #[test]
    fn laplacian_of_constants_and_quadratics() {
        let g = grid(3, 2.0, (2, 2), 32);
        let c = g.apply_laplacian(&g.constant(3.0)).unwrap();
        assert!(c.max_abs() < 1e-9);
        // n_2 cos^2 - n_1 sin^2 is the restriction of a degree-2 harmonic
        let v = g.from_fn(SymmetryClass::G, |t| 2.0 * t.cos().powi(2) - 2.0 * t.sin().powi(2));
        let lv = g.apply_laplacian(&v).unwrap();
        for (a, b) in lv.values.iter().zip(&v.values) {
            assert!((-a - 8.0 * b).abs() < 1e-8);
        }
        let g = grid(4, 1.0, (3, 2), 32);
        let v = g.from_fn(SymmetryClass::G, |t| 2.0 * t.cos().powi(2) - 3.0 * t.sin().powi(2));
        let lv = g.apply_laplacian(&v).unwrap();
        for (a, b) in lv.values.iter().zip(&v.values) {
            assert!((-a - 10.0 * b).abs() < 1e-8);
        }
    }

    #[test]
    fn h1_of_constant() {
        let g = grid(3, 2.0, (2, 2), 24);
        let one = g.constant(1.0);
        let v = g.h1_inner(&one, &one).unwrap();
        assert!((v - 1.5 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn harmonics_are_orthonormal_eigenfunctions() {
        for (n, parts) in [(3, (2, 2)), (4, (3, 2)), (5, (3, 3))] {
            let g = grid(n, 1.0, parts, 48);
            let hs: Vec<FieldFunction> =
                [0, 2, 4, 6].iter().map(|&d| g.invariant_harmonic(d).unwrap().unwrap().0).collect();
            for (i, a) in hs.iter().enumerate() {
                for (j, b) in hs.iter().enumerate() {
                    let ip = g.l2_inner(a, b);
                    assert!((ip - f64::from(u8::from(i == j))).abs() < 1e-8);
                }
            }
            for d in [0, 2, 4, 6] {
                let (v, lambda) = g.invariant_harmonic(d).unwrap().unwrap();
                assert!((lambda - g.harmonic_eigenvalue(d)).abs() < 1e-8, "n={n} d={d} {lambda}");
                let lv = g.apply_laplacian(&v).unwrap();
                let err = lv.values.iter().zip(&v.values).map(|(a, b)| (a + lambda * b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-7 * v.max_abs().max(1.0) * lambda.max(1.0));
            }
            assert!(g.invariant_harmonic(3).unwrap().is_none());
        }
        let g = grid(3, 1.0, (2, 2), 16);
        let (c, _) = g.invariant_harmonic(0).unwrap().unwrap();
        assert!((c.values[0].abs() - 1.0 / (2.0 * PI * PI).sqrt()).abs() < 1e-12);
        assert!(g.invariant_harmonic(100).is_err());
    }

    #[test]
    fn degree_two_harmonic_is_cos_two_theta() {
        let g = grid(3, 2.0, (2, 2), 32);
        let (v, lambda) = g.invariant_harmonic(2).unwrap().unwrap();
        let ratio = v.values[0] / (2.0 * g.nodes()[0]).cos();
        for (x, t) in v.values.iter().zip(g.nodes()) {
            assert!((x - ratio * (2.0 * t).cos()).abs() < 1e-12);
        }
        assert!((lambda - 8.0).abs() < 1e-8);
        assert_eq!(v.class, SymmetryClass::Gamma);
    }

    #[test]
    fn rayleigh_bound_on_orthogonal_complements() {
        use rand::{Rng, SeedableRng};
        let g = grid(3, 2.0, (2, 2), 32);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for ell in [2usize, 4] {
            for _ in 0..20 {
                // random smooth field: decaying random modal coefficients
                let mut vals = vec![0.0; g.len()];
                for k in ell / 2..g.len() {
                    let c: f64 = rng.random_range(-1.0..1.0) / (1.0 + k as f64).powi(2);
                    for i in 0..g.len() {
                        vals[i] += c * g.modes()[(i, k)];
                    }
                }
                let v = FieldFunction::new(vals, SymmetryClass::G);
                assert!(g.rayleigh_quotient(&v) >= g.harmonic_eigenvalue(ell) - 1e-6);
            }
        }
    }

    #[test]
    fn reflection_symmetric_nodes() {
        let g = grid(5, 2.0, (3, 3), 21);
        let t = g.nodes();
        for i in 0..t.len() {
            assert!((t[i] + t[t.len() - 1 - i] - PI / 2.0).abs() < 1e-14);
        }
        let v = g.from_fn(SymmetryClass::G, |x| x.cos().powi(3));
        let odd = g.project(&v, SymmetryClass::Gamma).unwrap();
        let r = g.reflect(&odd).unwrap();
        assert!(odd.values.iter().zip(&r.values).all(|(a, b)| (a + b).abs() < 1e-15));
        assert!(grid(4, 1.0, (3, 2), 16).reflect(&v).is_err());
    }

    #[test]
    fn interpolation_and_derivative() {
        let g = grid(4, 1.5, (3, 2), 24);
        let f = |t: f64| (2.0 * t).cos().powi(3) - 0.5 * (2.0 * t).cos();
        let v = g.from_fn(SymmetryClass::G, f);
        for t in [0.1, 0.5, 0.77, 1.2] {
            assert!((g.interpolate(&v, t) - f(t)).abs() < 1e-12);
        }
        let d = g.derivative(&v);
        for (i, &t) in g.nodes().iter().enumerate() {
            let c = (2.0 * t).cos();
            let exact = (3.0 * c * c - 0.5) * (-2.0 * (2.0 * t).sin());
            assert!((d[i] - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn csv_dump_has_header() {
        let g = grid(3, 1.0, (2, 2), 8);
        let csv = g.to_csv();
        assert!(csv.starts_with("theta,weight\n"));
        assert_eq!(csv.lines().count(), 9);
    }
}
