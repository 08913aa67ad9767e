//! Orbit-averaged chordal Riesz kernel on the reduced grid.
//!
//! `J_μ f(ξ) = ∫_{S^n} f(ζ) |ξ - ζ|^{-μ} dV(ζ)`. For an invariant `f` the
//! integral is computed in geodesic polar coordinates around each node
//! `ξ_i`: with `t = cos γ` the singular factor `(2 - 2t)^{-μ/2}` is absorbed
//! into a Gauss–Jacobi weight in `t`, and the direction `η` on the tangent
//! sphere is split into its component `a` along the orbit-normal direction
//! and the fraction `b` of the remainder lying in block 1. Both are again
//! Gauss–Jacobi variables. The rule integrates every invariant polynomial of
//! degree `< 2N` exactly, which yields the matrix with
//! `(J_μ f)_i = Σ_j K_ij w_j f_j` on the grid.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::grid::{FieldFunction, ReducedGrid};
use crate::params::ProblemParams;
use crate::quadrature::{gauss_jacobi, tanh_sinh, GaussRule};
use crate::sphere_area;

/// Quadrature orders used along `t`, `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureOrders {
    pub t: usize,
    pub a: usize,
    pub b: usize,
}

impl QuadratureOrders {
    pub fn for_grid(size: usize) -> Self {
        QuadratureOrders { t: size + 1, a: size + 1, b: size / 2 + 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMeta {
    pub n: u32,
    pub parts: (u32, u32),
    pub mu: String,
    pub mu_value: f64,
    pub size: usize,
    pub orders: QuadratureOrders,
    pub refinement_depth: u32,
    /// Largest `|K_ij - K_ji| / max|K|` before symmetrisation.
    pub estimated_error: f64,
}

/// Dense symmetric kernel matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub meta: KernelMeta,
    entries: Vec<f64>,
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.meta.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.meta.size + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.size(), self.size(), &self.entries)
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Hex SHA-256 of the little-endian entry bytes.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.entries.iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    pub fn matches(&self, grid: &ReducedGrid) -> bool {
        let p = grid.params();
        self.meta.n == p.n()
            && self.meta.parts == grid.parts()
            && self.meta.size == grid.len()
            && self.meta.mu == p.mu().to_string()
    }

    fn check(&self, grid: &ReducedGrid) -> Result<()> {
        if self.size() != grid.len() {
            return Err(Error::GridMismatch { field: self.size(), grid: grid.len() });
        }
        if !self.matches(grid) {
            return Err(Error::InvalidParams("kernel was assembled for different parameters".into()));
        }
        Ok(())
    }

    /// Long-format CSV `i,j,theta_i,theta_j,k`.
    pub fn to_csv(&self, grid: &ReducedGrid) -> String {
        let th = grid.nodes();
        let mut out = String::from("i,j,theta_i,theta_j,k\n");
        for i in 0..self.size() {
            for j in 0..self.size() {
                let _ = writeln!(out, "{i},{j},{:.17e},{:.17e},{:.17e}", th[i], th[j], self.get(i, j));
            }
        }
        out
    }
}

/// Assembles the kernel for the grid's parameters. Rows are computed in
/// parallel; each row is accumulated sequentially, so the result does not
/// depend on the number of threads.
pub fn assemble_kernel(grid: &ReducedGrid) -> Result<KernelMatrix> {
    let params = grid.params();
    let n = params.n();
    let mu = params.mu_f64();
    if !(mu > 0.0 && mu < n as f64) {
        return Err(Error::Domain(format!("kernel |x|^-{mu} is not integrable on S^{n}")));
    }
    let (n1, n2) = grid.parts();
    let size = grid.len();
    let orders = QuadratureOrders::for_grid(size);

    let nf = n as f64;
    let mut t_rule = gauss_jacobi(orders.t, (nf - 2.0 - mu) / 2.0, (nf - 2.0) / 2.0)?;
    let t_scale = 2f64.powf(-mu / 2.0) * sphere_area(n - 1);
    t_rule.weights.iter_mut().for_each(|w| *w *= t_scale);
    let a_rule = normalized(gauss_jacobi(orders.a, (nf - 3.0) / 2.0, (nf - 3.0) / 2.0)?);
    let b_rule = {
        // b ~ Beta((n1-1)/2, (n2-1)/2) on [0, 1]
        let r = normalized(gauss_jacobi(orders.b, (n2 as f64 - 3.0) / 2.0, (n1 as f64 - 3.0) / 2.0)?);
        GaussRule { nodes: r.nodes.iter().map(|x| 0.5 * (1.0 + x)).collect(), weights: r.weights }
    };

    let theta = grid.nodes();
    let rows: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|i| {
            let (sn, cs) = theta[i].sin_cos();
            let mut jy = vec![0.0; size];
            let mut y = vec![0.0; size];
            for (&t, &wt) in t_rule.nodes.iter().zip(&t_rule.weights) {
                let st = (1.0 - t * t).max(0.0).sqrt();
                for (&a, &wa) in a_rule.nodes.iter().zip(&a_rule.weights) {
                    let along = t * cs - st * a * sn;
                    let rest = (1.0 - t * t) * (1.0 - a * a);
                    for (&b, &wb) in b_rule.nodes.iter().zip(&b_rule.weights) {
                        let s = 2.0 * (along * along + rest * b) - 1.0;
                        grid.eval_modes(s, &mut y);
                        let w = wt * wa * wb;
                        jy.iter_mut().zip(&y).for_each(|(acc, v)| *acc += w * v);
                    }
                }
            }
            // K_ij = Σ_k (J Y_k)(ξ_i) Y_k(s_j)
            let modes = grid.modes();
            (0..size).map(|j| (0..size).map(|k| jy[k] * modes[(j, k)]).sum()).collect()
        })
        .collect();

    let mut entries = vec![0.0; size * size];
    let mut asym = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..size {
        for j in 0..size {
            scale = scale.max(rows[i][j].abs());
            if j > i {
                asym = asym.max((rows[i][j] - rows[j][i]).abs());
            }
        }
    }
    for i in 0..size {
        for j in 0..size {
            entries[i * size + j] = 0.5 * (rows[i][j] + rows[j][i]);
        }
    }
    Ok(KernelMatrix {
        meta: KernelMeta {
            n,
            parts: (n1, n2),
            mu: params.mu().to_string(),
            mu_value: mu,
            size,
            orders,
            refinement_depth: 0,
            estimated_error: if scale > 0.0 { asym / scale } else { 0.0 },
        },
        entries,
    })
}

fn normalized(mut r: GaussRule) -> GaussRule {
    let total: f64 = r.weights.iter().sum();
    r.weights.iter_mut().for_each(|w| *w /= total);
    r
}

/// `(J_μ f)_i = Σ_j K_ij w_j f_j`.
pub fn apply_jmu(kernel: &KernelMatrix, grid: &ReducedGrid, f: &FieldFunction) -> Result<FieldFunction> {
    grid.check(f)?;
    Ok(FieldFunction::new(apply_raw(kernel, grid, &f.values)?, f.class))
}

pub(crate) fn apply_raw(kernel: &KernelMatrix, grid: &ReducedGrid, f: &[f64]) -> Result<Vec<f64>> {
    kernel.check(grid)?;
    let size = kernel.size();
    let wf: Vec<f64> = f.iter().zip(grid.weights()).map(|(a, w)| a * w).collect();
    Ok((0..size)
        .map(|i| kernel.entries[i * size..(i + 1) * size].iter().zip(&wf).map(|(k, x)| k * x).sum())
        .collect())
}

/// `∬ f(ξ) g(ζ) |ξ - ζ|^{-μ}` on the grid.
pub fn nonlocal_pairing(kernel: &KernelMatrix, grid: &ReducedGrid, f: &[f64], g: &[f64]) -> Result<f64> {
    let jg = apply_raw(kernel, grid, g)?;
    Ok(grid.integrate(&f.iter().zip(&jg).map(|(a, b)| a * b).collect::<Vec<_>>()))
}

/// `(∬ J_μ[|v|^p] |v|^p dV)^{1/(2p)}` with `p = 2*_μ`.
pub fn nl_norm(kernel: &KernelMatrix, grid: &ReducedGrid, v: &FieldFunction) -> Result<f64> {
    grid.check(v)?;
    let p = grid.params().p();
    let f: Vec<f64> = v.values.iter().map(|x| x.abs().powf(p)).collect();
    Ok(nonlocal_pairing(kernel, grid, &f, &f)?.max(0.0).powf(1.0 / (2.0 * p)))
}

/// Gegenbauer `C_ℓ^λ(t) / C_ℓ^λ(1)`.
pub fn gegenbauer_normalized(degree: usize, lambda: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        // Chebyshev limit
        return (degree as f64 * t.clamp(-1.0, 1.0).acos()).cos();
    }
    let mut prev = 1.0;
    if degree == 0 {
        return prev;
    }
    let mut cur = 2.0 * lambda * t;
    let mut at_one = (2.0 * lambda, 1.0);
    for k in 1..degree {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda) * t * cur - (kf + 2.0 * lambda - 1.0) * prev) / (kf + 1.0);
        let next1 = (2.0 * (kf + lambda) * at_one.0 - (kf + 2.0 * lambda - 1.0) * at_one.1) / (kf + 1.0);
        prev = cur;
        cur = next;
        at_one = (next1, at_one.0);
    }
    cur / at_one.0
}

/// Eigenvalue of `J_μ` on spherical harmonics of the given degree, from the
/// one-dimensional Funk–Hecke integral.
pub fn funk_hecke_eigenvalue(params: &ProblemParams, degree: usize) -> Result<f64> {
    let n = params.n();
    let mu = params.mu_f64();
    let lambda = (n as f64 - 1.0) / 2.0;
    let e = (n as f64 - 2.0) / 2.0;
    let area = sphere_area(n - 1);
    tanh_sinh(
        |t, one_minus, one_plus| {
            area * (2.0 * one_minus).powf(-mu / 2.0)
                * gegenbauer_normalized(degree, lambda, t)
                * (one_minus * one_plus).powf(e)
        },
        1e-12,
    )
}

/// Closed form `2^{n-μ} π^{n/2} Γ((n-μ)/2)/Γ(μ/2) · Γ(ℓ+μ/2)/Γ(ℓ+n-μ/2)`.
pub fn funk_hecke_closed_form(params: &ProblemParams, degree: usize) -> f64 {
    let n = params.n() as f64;
    let mu = params.mu_f64();
    let l = degree as f64;
    ((n - mu) * std::f64::consts::LN_2 + 0.5 * n * std::f64::consts::PI.ln() + ln_gamma((n - mu) / 2.0)
        - ln_gamma(mu / 2.0)
        + ln_gamma(l + mu / 2.0)
        - ln_gamma(l + n - mu / 2.0))
    .exp()
}

/// Funk–Hecke eigenvalues computed on first request.
#[derive(Debug)]
pub struct FunkHeckeTable {
    params: ProblemParams,
    values: RefCell<BTreeMap<usize, f64>>,
}

impl FunkHeckeTable {
    pub fn new(params: &ProblemParams) -> Self {
        FunkHeckeTable { params: params.clone(), values: RefCell::new(BTreeMap::new()) }
    }

    pub fn get(&self, degree: usize) -> Result<f64> {
        if let Some(v) = self.values.borrow().get(&degree) {
            return Ok(*v);
        }
        let v = funk_hecke_eigenvalue(&self.params, degree)?;
        self.values.borrow_mut().insert(degree, v);
        Ok(v)
    }

    pub fn computed(&self) -> usize {
        self.values.borrow().len()
    }
}

/// What happened when a kernel was requested from the cache.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Miss,
    Rebuilt(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    meta: KernelMeta,
    sha256: String,
}

/// On-disk kernel store: `<key>.bin` holds the entries as little-endian
/// `f64`, `<key>.json` the metadata and the SHA-256 of the binary file.
#[derive(Debug, Clone)]
pub struct KernelCache {
    dir: PathBuf,
}

impl KernelCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        KernelCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(grid: &ReducedGrid) -> String {
        let p = grid.params();
        let o = QuadratureOrders::for_grid(grid.len());
        let mu: String =
            p.mu().to_string().chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect();
        format!(
            "kernel_n{}_{}x{}_mu{}_N{}_q{}-{}-{}",
            p.n(),
            grid.parts().0,
            grid.parts().1,
            mu,
            grid.len(),
            o.t,
            o.a,
            o.b
        )
    }

    fn paths(&self, grid: &ReducedGrid) -> (PathBuf, PathBuf) {
        let key = Self::key(grid);
        (self.dir.join(format!("{key}.bin")), self.dir.join(format!("{key}.json")))
    }

    pub fn load(&self, grid: &ReducedGrid) -> Result<Option<KernelMatrix>> {
        let (bin, json) = self.paths(grid);
        if !bin.exists() || !json.exists() {
            return Ok(None);
        }
        let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(&json)?)
            .map_err(|e| Error::CacheCorrupt(format!("{}: {e}", json.display())))?;
        let bytes = fs::read(&bin)?;
        let digest = hex::encode(Sha256::digest(&bytes));
        if digest != sidecar.sha256 {
            return Err(Error::CacheCorrupt(format!("{}: hash mismatch", bin.display())));
        }
        let size = sidecar.meta.size;
        if bytes.len() != size * size * 8 {
            return Err(Error::CacheCorrupt(format!("{}: wrong length", bin.display())));
        }
        let entries = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let k = KernelMatrix { meta: sidecar.meta, entries };
        if !k.matches(grid) || k.meta.orders != QuadratureOrders::for_grid(grid.len()) {
            return Err(Error::CacheCorrupt(format!("{}: metadata does not match the request", json.display())));
        }
        Ok(Some(k))
    }

    pub fn store(&self, kernel: &KernelMatrix, grid: &ReducedGrid) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let (bin, json) = self.paths(grid);
        let bytes = kernel.to_bytes();
        let sidecar = Sidecar { meta: kernel.meta.clone(), sha256: hex::encode(Sha256::digest(&bytes)) };
        fs::write(&bin, &bytes)?;
        fs::write(&json, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Returns the cached kernel, assembling and storing it when absent or
    /// when the stored copy fails its integrity check.
    pub fn load_or_assemble(&self, grid: &ReducedGrid) -> Result<(KernelMatrix, CacheOutcome)> {
        let outcome = match self.load(grid) {
            Ok(Some(k)) => return Ok((k, CacheOutcome::Hit)),
            Ok(None) => CacheOutcome::Miss,
            Err(Error::CacheCorrupt(msg)) => CacheOutcome::Rebuilt(msg),
            Err(e) => return Err(e),
        };
        let k = assemble_kernel(grid)?;
        self.store(&k, grid)?;
        Ok((k, outcome))
    }
}
