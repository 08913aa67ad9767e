//! Critical-point searches.
//!
//! [`ChoquardProblem::solve_critical_point`] combines damped Newton steps on
//! `E'` with a Nehari-projected `H^1` gradient flow that takes over whenever
//! Newton fails to reduce the residual. [`ChoquardProblem::solve_sequence`]
//! finds the least-energy solution of a class and then climbs with a local
//! minimax iteration: the next solution is sought as a critical point of `E`
//! over the peak points of the half-spaces `span(L, v)`, `L` being the
//! solutions found so far, followed by a Newton polish.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::diagnostics::detect_sign_change_vec;
use super::{ChoquardProblem, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::grid::{FieldFunction, SymmetryClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Target `H^1` residual.
    pub tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub min_step: f64,
    /// Penalty weight relative to the energy of each deflated solution.
    pub deflation_strength: f64,
    /// Residual below which the deflation penalty is dropped.
    pub polish_threshold: f64,
    pub newton: bool,
    /// Largest accepted relative size of the top modal coefficients.
    pub resolution_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 500,
            initial_step: 1.0,
            shrink: 0.5,
            min_step: 1e-12,
            deflation_strength: 1e-3,
            polish_threshold: 1e-4,
            newton: true,
            resolution_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    #[serde(flatten)]
    pub field: FieldFunction,
    pub energy: EnergyBreakdown,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub sign_change: bool,
    pub nodal_thetas: Vec<f64>,
    pub h1_norm: f64,
    /// `⟨E'(v), v⟩`.
    pub nehari_defect: f64,
    pub resolution_tail: f64,
    /// `bubble_lift`, `one_signed` or `sign_changing`.
    pub label: String,
    pub seed_degree: Option<usize>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceOutcome {
    pub solutions: Vec<SolveResult>,
    pub warnings: Vec<String>,
}

const LMM_MAX_ITER: usize = 400;
const MAX_RESTARTS: usize = 3;

impl ChoquardProblem {
    fn class_images(&self, u: &DVector<f64>) -> Vec<DVector<f64>> {
        let mut out = vec![u.clone(), -u];
        if self.grid.has_swap() {
            let r = DVector::from_iterator(u.len(), u.iter().rev().copied());
            out.push(-&r);
            out.push(r);
        }
        out
    }

    fn h1_norm_vec(&self, v: &DVector<f64>) -> f64 {
        self.h1(v, v).max(0.0).sqrt()
    }

    /// `Σ_k β_k / (‖v - u‖² ‖v + u‖²)` over the images `u` of each deflated solution.
    fn penalty(&self, v: &DVector<f64>, deflate: &[(DVector<f64>, f64)]) -> (f64, DVector<f64>) {
        let mut value = 0.0;
        let mut grad = DVector::zeros(v.len());
        for (u, beta) in deflate {
            let images = self.class_images(u);
            for pair in images.chunks(2) {
                let dm = v - &pair[0];
                let dp = v - &pair[1];
                let a = self.h1(&dm, &dm).max(1e-300);
                let b = self.h1(&dp, &dp).max(1e-300);
                value += beta / (a * b);
                grad -= (&dm * (2.0 / (a * a * b)) + &dp * (2.0 / (a * b * b))) * *beta;
            }
        }
        (value, grad)
    }

    fn near_any(&self, v: &DVector<f64>, others: &[(DVector<f64>, f64)]) -> bool {
        let nv = self.h1_norm_vec(v);
        others.iter().any(|(u, _)| {
            let scale = 1e-4 * nv.max(self.h1_norm_vec(u));
            self.class_images(u).iter().any(|img| self.h1_norm_vec(&(v - img)) <= scale)
        })
    }

    fn normalize_sign(&self, v: &mut DVector<f64>) {
        let tau = 1e-9 * v.amax();
        if let Some(first) = v.iter().find(|x| x.abs() > tau) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
    }

    /// Damped Newton step on `E'`; returns the new field when it lowers the residual.
    fn newton_step(&self, v: &DVector<f64>, r: f64, class: SymmetryClass) -> Option<(DVector<f64>, f64)> {
        let nl = self.nonlinear(v);
        let d = self.nodal_derivative(v, &nl);
        let delta = self.hessian(v).lu().solve(&(-d))?;
        let delta = self.project_vec(&delta, class);
        if !delta.iter().all(|x| x.is_finite()) {
            return None;
        }
        let mut t = 1.0;
        while t >= 1.0 / 64.0 {
            let cand = v + &delta * t;
            let rn = self.residual_vec(&cand);
            if rn < (1.0 - 1e-4 * t) * r {
                return Some((cand, rn));
            }
            t *= 0.5;
        }
        None
    }

    /// Critical point in `class` reached from `seed`.
    ///
    /// Fields in `deflate` (and their negatives and reflections) are kept away
    /// by a penalty during the gradient phase. Running out of iterations
    /// yields a result with `converged = false`.
    pub fn solve_critical_point(
        &self,
        class: SymmetryClass,
        seed: &FieldFunction,
        opts: &SolveOptions,
        deflate: &[FieldFunction],
    ) -> Result<SolveResult> {
        self.grid.check(seed)?;
        if class == SymmetryClass::Gamma && !self.grid.has_swap() {
            return Err(Error::NotApplicable(format!("blocks {:?} admit no swap", self.grid.parts())));
        }
        for d in deflate {
            self.grid.check(d)?;
        }
        let x0 = self.project_vec(&seed.to_vector(), class);
        if x0.amax() == 0.0 {
            return Err(Error::InvalidParams(format!("seed has no component in class {class}")));
        }
        let deflate: Vec<(DVector<f64>, f64)> = deflate
            .iter()
            .map(|u| {
                let x = u.to_vector();
                let e = self.energy_vec(&x).total.abs();
                (x, opts.deflation_strength * e)
            })
            .collect();

        let mut diagnostics = Vec::new();
        let mut v = &x0 * self.nehari_scale_vec(&x0)?;
        let mut restarts = 0;
        let mut converged = false;
        let mut iterations = 0;
        let mut newton_steps = 0;
        let mut gradient_steps = 0;
        while iterations < opts.max_iter {
            let r = self.residual_vec(&v);
            if r < opts.tol {
                converged = true;
                break;
            }
            iterations += 1;
            let penalized = !deflate.is_empty() && r > opts.polish_threshold;

            if opts.newton {
                if let Some((cand, _)) = self.newton_step(&v, r, class) {
                    if !(penalized && self.near_any(&cand, &deflate)) {
                        v = cand;
                        newton_steps += 1;
                        continue;
                    }
                }
            }

            let objective = |x: &DVector<f64>| -> f64 {
                let e = self.energy_vec(x).total;
                if penalized { e + self.penalty(x, &deflate).0 } else { e }
            };
            let mut g = self.gradient_vec(&v);
            if penalized {
                g += self.penalty(&v, &deflate).1;
            }
            let g = self.project_vec(&g, class);
            let gn2 = self.h1(&g, &g);
            let e0 = objective(&v);
            let mut eta = opts.initial_step;
            let mut moved = false;
            while eta >= opts.min_step {
                let trial = &v - &g * eta;
                if let Ok(t) = self.nehari_scale_vec(&trial) {
                    let cand = trial * t;
                    if objective(&cand) <= e0 - 1e-4 * eta * gn2 {
                        v = cand;
                        moved = true;
                        break;
                    }
                }
                eta *= opts.shrink;
            }
            gradient_steps += 1;
            if !moved {
                diagnostics.push(format!("line search stalled at residual {r:.3e}"));
                break;
            }
            if self.h1_norm_vec(&v) < 1e-8 {
                restarts += 1;
                if restarts > MAX_RESTARTS {
                    return Err(Error::Numerical("iteration collapsed to the zero field".into()));
                }
                diagnostics.push("collapse to zero; restarted from the seed".into());
                v = &x0 * (self.nehari_scale_vec(&x0)? * (1.0 + 0.1 * restarts as f64));
            }
        }
        if !converged && iterations >= opts.max_iter {
            converged = self.residual_vec(&v) < opts.tol;
            if !converged {
                diagnostics.push(format!("maximum of {} iterations reached", opts.max_iter));
            }
        }
        diagnostics.push(format!("{newton_steps} Newton steps, {gradient_steps} gradient steps"));
        let mut result = self.finish(v, class, iterations, converged, None, diagnostics);
        if !deflate.is_empty() && self.near_any(&result.field.to_vector(), &deflate) {
            result.diagnostics.push("coincides with a deflated solution".into());
        }
        Ok(result)
    }

    fn finish(
        &self,
        mut v: DVector<f64>,
        class: SymmetryClass,
        iterations: usize,
        converged: bool,
        seed_degree: Option<usize>,
        diagnostics: Vec<String>,
    ) -> SolveResult {
        let v_class = self.project_vec(&v, class);
        if class == SymmetryClass::Gamma {
            v = v_class;
        }
        self.normalize_sign(&mut v);
        let energy = self.energy_vec(&v);
        let residual = self.residual_vec(&v);
        let h1_norm = self.h1_norm_vec(&v);
        let nehari_defect = h1_norm * h1_norm - self.nonlinear(&v).pairing;
        let field = FieldFunction::new(v.iter().copied().collect(), class);
        let (sign_change, nodal_thetas) = detect_sign_change_vec(&self.grid, &field);
        let resolution_tail = self.grid.resolution_tail(&field);
        let vmax = v.max();
        let vmin = v.min();
        let constant = vmax - vmin <= 1e-8 * v.amax();
        let n = self.params().n();
        let mu = self.params().mu_f64();
        // positive solutions are not classified for n ≥ 5, μ ∈ (4, n)
        let label = if constant && !(n >= 5 && mu > 4.0) {
            "bubble_lift"
        } else if sign_change {
            "sign_changing"
        } else {
            "one_signed"
        };
        SolveResult {
            field,
            energy,
            residual,
            iterations,
            converged,
            sign_change,
            nodal_thetas,
            h1_norm,
            nehari_defect,
            resolution_tail,
            label: label.to_string(),
            seed_degree,
            diagnostics,
        }
    }

    /// Maximiser of `x ↦ E(Σ x_i b_i)` near `x`, by safeguarded Newton on the
    /// coefficients.
    fn peak(&self, basis: &[DVector<f64>], mut x: DVector<f64>) -> Option<DVector<f64>> {
        let b = DMatrix::from_columns(basis);
        let metric = (b.transpose() * self.grid.stiffness() * &b).lu();
        let value = |x: &DVector<f64>| self.energy_vec(&(&b * x)).total;
        for _ in 0..200 {
            let pv = &b * &x;
            let nl = self.nonlinear(&pv);
            let d = self.nodal_derivative(&pv, &nl);
            let grad = b.transpose() * &d;
            let gnorm = grad.dot(&metric.solve(&grad)?).abs().sqrt();
            if gnorm <= 1e-13 * self.h1_norm_vec(&pv).max(1.0) {
                return Some(x);
            }
            let hess = b.transpose() * self.hessian(&pv) * &b;
            let e0 = value(&x);
            // Newton when the model is concave, preconditioned ascent otherwise
            let dir = match (-&hess).cholesky() {
                Some(ch) => ch.solve(&grad),
                None => metric.solve(&grad)?,
            };
            let mut t = 1.0;
            let mut moved = false;
            while t > 1e-12 {
                let cand = &x + &dir * t;
                if value(&cand) >= e0 + 1e-4 * t * grad.dot(&dir) {
                    x = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                return (gnorm <= 1e-8 * self.h1_norm_vec(&pv).max(1.0)).then_some(x);
            }
        }
        Some(x)
    }

    /// Local minimax iteration with support `support`, starting in direction `seed`.
    fn minimax(&self, class: SymmetryClass, support: &[DVector<f64>], seed: &DVector<f64>) -> Option<DVector<f64>> {
        let orth = |mut v: DVector<f64>| -> Option<DVector<f64>> {
            v = self.project_vec(&v, class);
            for _ in 0..2 {
                for u in support {
                    let c = self.h1(&v, u) / self.h1(u, u);
                    v -= u * c;
                }
            }
            let nv = self.h1_norm_vec(&v);
            (nv > 1e-12).then(|| v / nv)
        };
        let mut v = orth(seed.clone())?;
        let mut basis: Vec<DVector<f64>> = support.to_vec();
        basis.push(v.clone());
        let mut x = DVector::zeros(basis.len());
        let last = basis.len() - 1;
        x[last] = self.nehari_scale_vec(&v).ok()?;
        x = self.peak(&basis, x)?;
        for _ in 0..LMM_MAX_ITER {
            let pv = DMatrix::from_columns(&basis) * &x;
            let g = self.project_vec(&self.gradient_vec(&pv), class);
            let r = self.h1_norm_vec(&g);
            if r < 1e-6 * self.h1_norm_vec(&pv).max(1.0) {
                return Some(pv);
            }
            let e0 = self.energy_vec(&pv).total;
            let sign = x[last].signum();
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-10 {
                let Some(vn) = orth(&v - &g * (lambda * sign)) else {
                    lambda *= 0.5;
                    continue;
                };
                basis[last] = vn.clone();
                if let Some(xn) = self.peak(&basis, x.clone()) {
                    let pn = DMatrix::from_columns(&basis) * &xn;
                    if self.energy_vec(&pn).total < e0 - 1e-4 * lambda * x[last].abs() * r * r {
                        v = vn;
                        x = xn;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                basis[last] = v.clone();
                // stalled: hand the current peak to the Newton polish
                return Some(DMatrix::from_columns(&basis) * &x);
            }
        }
        Some(DMatrix::from_columns(&basis) * &x)
    }

    fn class_degrees(&self, class: SymmetryClass) -> Vec<usize> {
        (0..self.grid.len())
            .filter(|k| class == SymmetryClass::G || k % 2 == 1)
            .map(|k| 2 * k)
            .take(16)
            .collect()
    }

    fn harmonic_seed(&self, degree: usize) -> Result<DVector<f64>> {
        let (y, _) = self
            .grid
            .invariant_harmonic(degree)?
            .ok_or_else(|| Error::InvalidParams(format!("no invariant harmonic of degree {degree}")))?;
        let v = y.to_vector();
        Ok(&v / v.amax())
    }

    fn acceptable(&self, r: &SolveResult, found: &[SolveResult], opts: &SolveOptions) -> bool {
        if !r.converged || r.h1_norm < 1e-6 || r.resolution_tail > opts.resolution_tol {
            return false;
        }
        let v = r.field.to_vector();
        let others: Vec<(DVector<f64>, f64)> = found.iter().map(|s| (s.field.to_vector(), 0.0)).collect();
        !self.near_any(&v, &others)
    }

    /// Up to `count` distinct critical points of the class, sorted by energy.
    pub fn solve_sequence(&self, class: SymmetryClass, count: usize, opts: &SolveOptions) -> Result<SequenceOutcome> {
        if count == 0 {
            return Err(Error::InvalidParams("count must be at least 1".into()));
        }
        if class == SymmetryClass::Gamma && !self.grid.has_swap() {
            return Err(Error::NotApplicable(format!("blocks {:?} admit no swap", self.grid.parts())));
        }
        let degrees = self.class_degrees(class);
        let mut found: Vec<SolveResult> = Vec::new();
        let mut warnings = Vec::new();

        let ground_degree = degrees[0];
        let seed = if ground_degree == 0 {
            DVector::from_element(self.grid.len(), 1.0)
        } else {
            self.harmonic_seed(ground_degree)?
        };
        let seed_field = FieldFunction::new(seed.iter().copied().collect(), class);
        let mut ground = self.solve_critical_point(class, &seed_field, opts, &[])?;
        ground.seed_degree = Some(ground_degree);
        if self.acceptable(&ground, &found, opts) {
            found.push(ground);
        } else {
            warnings.push(format!(
                "least-energy search from degree {ground_degree} did not converge (residual {:.3e})",
                ground.residual
            ));
        }

        for &deg in degrees.iter().skip(1) {
            if found.len() >= count {
                break;
            }
            let support: Vec<DVector<f64>> = found.iter().map(|s| s.field.to_vector()).collect();
            let seed = self.harmonic_seed(deg)?;
            let Some(pv) = self.minimax(class, &support, &seed) else {
                continue;
            };
            let start = FieldFunction::new(pv.iter().copied().collect(), class);
            let Ok(mut r) = self.polish(class, &start, opts) else {
                continue;
            };
            r.seed_degree = Some(deg);
            if self.acceptable(&r, &found, opts) {
                found.push(r);
            }
        }

        if found.len() < count {
            // plain Newton from single harmonics and shifted harmonics
            'outer: for &deg in &degrees {
                for shift in [0.0, 1.0] {
                    if found.len() >= count {
                        break 'outer;
                    }
                    if deg == 0 || (shift != 0.0 && class == SymmetryClass::Gamma) {
                        continue;
                    }
                    let seed = self.harmonic_seed(deg)? + DVector::from_element(self.grid.len(), shift);
                    let start = FieldFunction::new(seed.iter().copied().collect(), class);
                    let Ok(mut r) = self.solve_critical_point(class, &start, opts, &[]) else {
                        continue;
                    };
                    r.seed_degree = Some(deg);
                    if self.acceptable(&r, &found, opts) {
                        found.push(r);
                    }
                }
            }
        }

        found.sort_by(|a, b| a.energy.total.total_cmp(&b.energy.total));
        if found.len() < count {
            warnings.push(format!("found {} of {count} requested critical points", found.len()));
        }
        Ok(SequenceOutcome { solutions: found, warnings })
    }

    /// Newton-only continuation from a good starting field.
    fn polish(&self, class: SymmetryClass, start: &FieldFunction, opts: &SolveOptions) -> Result<SolveResult> {
        let x0 = self.project_vec(&start.to_vector(), class);
        let mut v = x0;
        let mut iterations = 0;
        let mut r = self.residual_vec(&v);
        while r >= opts.tol && iterations < 100 {
            iterations += 1;
            match self.newton_step(&v, r, class) {
                Some((cand, rn)) => {
                    v = cand;
                    r = rn;
                }
                None => break,
            }
        }
        let converged = r < opts.tol;
        let diagnostics = vec![format!("{iterations} Newton steps after minimax search")];
        Ok(self.finish(v, class, iterations, converged, None, diagnostics))
    }
}
