//! Lifted energy, its `H^1` gradient and critical-point searches.
//!
//! On nodal values the discrete energy is
//! `E(v) = ½ vᵀSv - (1/2p) fᵀ W K W f` with `f = |v|^p`, `S` the `H^1` Gram
//! matrix, `W` the quadrature weights and `K` the kernel. Every derivative
//! below is the exact derivative of this expression, so finite differences
//! of [`ChoquardProblem::energy`] reproduce [`ChoquardProblem::gradient`] to
//! rounding.

mod diagnostics;
mod search;

pub use diagnostics::{detect_sign_change, MountainPassReport};
pub use search::{SequenceOutcome, SolveOptions, SolveResult};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FieldFunction, ReducedGrid, SymmetryClass};
use crate::kernel::{funk_hecke_closed_form, KernelMatrix};
use crate::params::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub quadratic: f64,
    pub nonlocal: f64,
    pub total: f64,
}

/// Grid, kernel and the factorisations shared by all solves at one parameter point.
#[derive(Debug, Clone)]
pub struct ChoquardProblem {
    grid: ReducedGrid,
    kernel: KernelMatrix,
    k: DMatrix<f64>,
    w: DVector<f64>,
    s_chol: Cholesky<f64, Dyn>,
    p: f64,
}

/// Pieces of the nonlinearity at one field.
pub(crate) struct Nonlinear {
    /// `|v|^{p-2} v`
    phi: DVector<f64>,
    /// `K W |v|^p`
    jf: DVector<f64>,
    /// `fᵀ W K W f`
    pairing: f64,
}

impl ChoquardProblem {
    pub fn new(grid: ReducedGrid, kernel: KernelMatrix) -> Result<Self> {
        if kernel.size() != grid.len() {
            return Err(Error::GridMismatch { field: kernel.size(), grid: grid.len() });
        }
        if !kernel.matches(&grid) {
            return Err(Error::InvalidParams("kernel was assembled for different parameters".into()));
        }
        let s_chol = Cholesky::new(grid.stiffness().clone()).ok_or_else(|| {
            let d = grid.stiffness().diagonal();
            let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
            Error::Numerical(format!("H1 Gram matrix is not positive definite (diagonal range {lo:.3e}..{hi:.3e})"))
        })?;
        let p = grid.params().p();
        Ok(ChoquardProblem {
            k: kernel.to_matrix(),
            w: DVector::from_column_slice(grid.weights()),
            grid,
            kernel,
            s_chol,
            p,
        })
    }

    pub fn grid(&self) -> &ReducedGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn params(&self) -> &ProblemParams {
        self.grid.params()
    }

    /// The exponent `2*_μ`.
    pub fn p(&self) -> f64 {
        self.p
    }

    fn vec(v: &FieldFunction) -> DVector<f64> {
        v.to_vector()
    }

    pub(crate) fn h1(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        self.grid.h1_vec(u, v)
    }

    pub(crate) fn nonlinear(&self, v: &DVector<f64>) -> Nonlinear {
        let p = self.p;
        let f = v.map(|x| x.abs().powf(p));
        let wf = f.component_mul(&self.w);
        let jf = &self.k * &wf;
        let pairing = wf.dot(&jf);
        let phi = v.map(|x| x.signum() * x.abs().powf(p - 1.0));
        Nonlinear { phi, jf, pairing }
    }

    pub(crate) fn energy_vec(&self, v: &DVector<f64>) -> EnergyBreakdown {
        let quadratic = 0.5 * self.h1(v, v);
        let nonlocal = self.nonlinear(v).pairing / (2.0 * self.p);
        EnergyBreakdown { quadratic, nonlocal, total: quadratic - nonlocal }
    }

    /// `∂E/∂v_i = (Sv)_i - w_i φ_i (KWf)_i`.
    pub(crate) fn nodal_derivative(&self, v: &DVector<f64>, nl: &Nonlinear) -> DVector<f64> {
        self.grid.stiffness() * v - nl.phi.component_mul(&nl.jf).component_mul(&self.w)
    }

    /// `H^1` Riesz representative of a nodal derivative.
    pub(crate) fn riesz(&self, d: &DVector<f64>) -> DVector<f64> {
        // one step of iterative refinement; S is badly conditioned at large grids
        let mut g = self.s_chol.solve(d);
        let r = d - self.grid.stiffness() * &g;
        g += self.s_chol.solve(&r);
        g
    }

    pub(crate) fn gradient_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let nl = self.nonlinear(v);
        self.riesz(&self.nodal_derivative(v, &nl))
    }

    /// Hessian of the discrete energy.
    pub(crate) fn hessian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let p = self.p;
        let nl = self.nonlinear(v);
        let n = v.len();
        let scale = v.amax().max(f64::MIN_POSITIVE);
        // |v|^{p-2} is unbounded at zeros when p < 2; the floor only affects the Newton model
        let floor = 1e-12 * scale;
        let mut h = self.grid.stiffness().clone();
        for i in 0..n {
            let a = v[i].abs().max(floor);
            h[(i, i)] -= self.w[i] * (p - 1.0) * a.powf(p - 2.0) * nl.jf[i];
        }
        let wp: DVector<f64> = nl.phi.component_mul(&self.w);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= wp[i] * self.k[(i, j)] * wp[j] * p;
            }
        }
        h
    }

    pub fn energy(&self, v: &FieldFunction) -> Result<EnergyBreakdown> {
        self.grid.check(v)?;
        Ok(self.energy_vec(&Self::vec(v)))
    }

    /// `H^1` gradient `g` with `h1_inner(g, φ) = ⟨E'(v), φ⟩` for all grid functions `φ`.
    pub fn gradient(&self, v: &FieldFunction) -> Result<FieldFunction> {
        self.grid.check(v)?;
        let g = self.gradient_vec(&Self::vec(v));
        Ok(FieldFunction::new(g.iter().copied().collect(), v.class))
    }

    /// `‖E'(v)‖` in the `H^1` dual norm.
    pub fn residual(&self, v: &FieldFunction) -> Result<f64> {
        self.grid.check(v)?;
        let x = Self::vec(v);
        let nl = self.nonlinear(&x);
        let d = self.nodal_derivative(&x, &nl);
        Ok(d.dot(&self.riesz(&d)).max(0.0).sqrt())
    }

    pub(crate) fn residual_vec(&self, v: &DVector<f64>) -> f64 {
        let nl = self.nonlinear(v);
        let d = self.nodal_derivative(v, &nl);
        d.dot(&self.riesz(&d)).max(0.0).sqrt()
    }

    /// `∬ J_μ[|v|^p] |v|^p dV`.
    pub fn nonlocal_pairing(&self, v: &FieldFunction) -> Result<f64> {
        self.grid.check(v)?;
        Ok(self.nonlinear(&Self::vec(v)).pairing)
    }

    /// `⟨E'(v), v⟩ = ‖v‖²_{H^1} - ∬ J_μ[|v|^p] |v|^p`.
    pub fn nehari_defect(&self, v: &FieldFunction) -> Result<f64> {
        self.grid.check(v)?;
        let x = Self::vec(v);
        Ok(self.h1(&x, &x) - self.nonlinear(&x).pairing)
    }

    /// `t* = (A/B)^{1/(2p-2)}` placing `t* v` on the Nehari manifold.
    pub fn nehari_scale(&self, v: &FieldFunction) -> Result<f64> {
        self.grid.check(v)?;
        self.nehari_scale_vec(&Self::vec(v))
    }

    pub(crate) fn nehari_scale_vec(&self, v: &DVector<f64>) -> Result<f64> {
        let a = self.h1(v, v);
        let b = self.nonlinear(v).pairing;
        if !(b > 0.0) || !(a > 0.0) {
            return Err(Error::Numerical("Nehari scaling of the zero field".into()));
        }
        Ok((a / b).powf(1.0 / (2.0 * self.p - 2.0)))
    }

    pub fn nehari_project(&self, v: &FieldFunction) -> Result<FieldFunction> {
        Ok(v.scaled(self.nehari_scale(v)?))
    }

    /// Constant `c*` with `n(n-2)/4 = C_μ c*^{2p-2}`, `C_μ = J_μ[1]`.
    pub fn constant_solution(&self) -> f64 {
        let c_mu = funk_hecke_closed_form(self.params(), 0);
        (self.params().mass() / c_mu).powf(1.0 / (2.0 * self.p - 2.0))
    }

    /// `(½ - 1/(2p)) ‖v‖²_{H^1}`, the energy of a critical point with this norm.
    pub fn critical_energy_from_norm(&self, h1_norm: f64) -> f64 {
        (0.5 - 0.5 / self.p) * h1_norm * h1_norm
    }

    pub(crate) fn project_vec(&self, v: &DVector<f64>, class: SymmetryClass) -> DVector<f64> {
        match class {
            SymmetryClass::G => v.clone(),
            SymmetryClass::Gamma => {
                let n = v.len();
                DVector::from_fn(n, |i, _| 0.5 * (v[i] - v[n - 1 - i]))
            }
        }
    }
}
