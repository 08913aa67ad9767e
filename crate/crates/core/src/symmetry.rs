//! Block-orthogonal symmetry groups `O(n_1) x ... x O(n_m)` acting on
//! `S^n ⊂ R^{n+1}`, block swaps, orbit dimensions and invariant harmonic
//! counts.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parts `(n_1, ..., n_m)` summing to `n + 1`, plus the pair of equal blocks
/// exchanged by the swap `tau`, if any.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupDescriptor {
    parts: Vec<u32>,
    swap: Option<(usize, usize)>,
}

impl GroupDescriptor {
    pub fn new(parts: Vec<u32>, swap: Option<(usize, usize)>) -> Result<Self> {
        if parts.len() < 2 {
            return Err(Error::InvalidParams("a descriptor needs at least two blocks".into()));
        }
        if parts.contains(&0) {
            return Err(Error::InvalidParams("block sizes must be positive".into()));
        }
        if let Some((i, j)) = swap {
            if i == j || i >= parts.len() || j >= parts.len() {
                return Err(Error::InvalidParams(format!("swap pair ({i}, {j}) is out of range")));
            }
            if parts[i] != parts[j] {
                return Err(Error::InvalidParams(format!(
                    "swap pair ({i}, {j}) joins blocks of sizes {} and {}",
                    parts[i], parts[j]
                )));
            }
        }
        Ok(GroupDescriptor { parts, swap })
    }

    /// Uses the first pair of equal blocks as the swap, when one exists.
    pub fn with_default_swap(parts: Vec<u32>) -> Result<Self> {
        let swap = first_equal_pair(&parts);
        Self::new(parts, swap)
    }

    /// Validates the descriptor against the sphere dimension `n`.
    pub fn for_dimension(parts: Vec<u32>, n: u32) -> Result<Self> {
        let g = Self::with_default_swap(parts)?;
        if g.total() != n + 1 {
            return Err(Error::InvalidParams(format!(
                "parts {:?} sum to {}, expected n + 1 = {}",
                g.parts,
                g.total(),
                n + 1
            )));
        }
        Ok(g)
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn swap(&self) -> Option<(usize, usize)> {
        self.swap
    }

    pub fn total(&self) -> u32 {
        self.parts.iter().sum()
    }

    /// Sphere dimension `n = Σ n_j - 1`.
    pub fn n(&self) -> u32 {
        self.total() - 1
    }

    fn block_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.parts
            .iter()
            .map(|&p| {
                let r = start..start + p as usize;
                start += p as usize;
                r
            })
            .collect()
    }

    /// Euclidean norms of the blocks of `xi`; two points share a `G`-orbit
    /// exactly when these agree.
    pub fn block_norms(&self, xi: &[f64]) -> Vec<f64> {
        self.block_ranges()
            .into_iter()
            .map(|r| xi[r].iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    pub fn same_orbit(&self, a: &[f64], b: &[f64], tol: f64) -> bool {
        self.block_norms(a).iter().zip(self.block_norms(b)).all(|(x, y)| (x - y).abs() <= tol)
    }
}

fn first_equal_pair(parts: &[u32]) -> Option<(usize, usize)> {
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            if parts[i] == parts[j] {
                return Some((i, j));
            }
        }
    }
    None
}

/// All partitions of `n + 1` into at least two parts, each at least 2, listed
/// with nonincreasing parts.
pub fn enumerate_descriptors(n: u32) -> Result<Vec<GroupDescriptor>> {
    if n < 3 {
        return Err(Error::InvalidParams(format!("n = {n} must be at least 3")));
    }
    fn rec(remaining: u32, max_part: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if remaining == 0 {
            if current.len() >= 2 {
                out.push(current.clone());
            }
            return;
        }
        for part in (2..=max_part.min(remaining)).rev() {
            current.push(part);
            rec(remaining - part, part, current, out);
            current.pop();
        }
    }
    let mut raw = Vec::new();
    rec(n + 1, n + 1, &mut Vec::new(), &mut raw);
    raw.into_iter().map(GroupDescriptor::with_default_swap).collect()
}

/// Whether the block-swap construction produces an admissible `tau`.
pub fn has_property_p(g: &GroupDescriptor) -> bool {
    first_equal_pair(&g.parts).is_some()
}

/// Permutation matrix exchanging two equal blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauMatrix {
    pub size: usize,
    /// Row-major 0/1 entries.
    pub entries: Vec<Vec<u8>>,
}

impl TauMatrix {
    pub fn apply(&self, xi: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|row| row.iter().zip(xi).filter(|(e, _)| **e == 1).map(|(_, x)| *x).sum())
            .collect()
    }

    pub fn square(&self) -> TauMatrix {
        let n = self.size;
        let mut entries = vec![vec![0u8; n]; n];
        for i in 0..n {
            for j in 0..n {
                entries[i][j] = (0..n).map(|k| self.entries[i][k] * self.entries[k][j]).sum();
            }
        }
        TauMatrix { size: n, entries }
    }

    pub fn is_orthogonal(&self) -> bool {
        let n = self.size;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let dot: u32 = (0..n).map(|k| (self.entries[k][i] * self.entries[k][j]) as u32).sum();
                dot == u32::from(i == j)
            })
        })
    }

    /// True when the matrix maps every block of `g` into itself, i.e. lies in `G`.
    pub fn preserves_blocks(&self, g: &GroupDescriptor) -> bool {
        let ranges = g.block_ranges();
        let block_of = |idx: usize| ranges.iter().position(|r| r.contains(&idx)).unwrap();
        (0..self.size).all(|i| (0..self.size).all(|j| self.entries[i][j] == 0 || block_of(i) == block_of(j)))
    }
}

pub fn build_tau(g: &GroupDescriptor) -> Result<TauMatrix> {
    let (bi, bj) = match g.swap.or_else(|| first_equal_pair(&g.parts)) {
        Some(pair) => pair,
        None => {
            return Err(Error::NotApplicable(format!("descriptor {:?} has no pair of equal blocks", g.parts)));
        }
    };
    let ranges = g.block_ranges();
    let size = g.total() as usize;
    let mut perm: Vec<usize> = (0..size).collect();
    for (a, b) in ranges[bi].clone().zip(ranges[bj].clone()) {
        perm[a] = b;
        perm[b] = a;
    }
    let mut entries = vec![vec![0u8; size]; size];
    for (i, &j) in perm.iter().enumerate() {
        entries[i][j] = 1;
    }
    Ok(TauMatrix { size, entries })
}

/// Smallest orbit dimension `min_j n_j - 1`; needs every block of size at least 2.
pub fn min_orbit_dimension(g: &GroupDescriptor) -> Result<u32> {
    match g.parts.iter().min() {
        Some(&m) if m >= 2 => Ok(m - 1),
        _ => Err(Error::InvalidParams(format!(
            "descriptor {:?} has a block of size < 2; some orbits are finite",
            g.parts
        ))),
    }
}

/// Exponent of the improved compact embedding of invariant `H^1` functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmbeddingExponent {
    Infinite,
    Finite(f64),
}

impl EmbeddingExponent {
    pub fn exceeds(&self, p: f64) -> bool {
        match self {
            EmbeddingExponent::Infinite => true,
            EmbeddingExponent::Finite(q) => *q > p,
        }
    }
}

impl Serialize for EmbeddingExponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EmbeddingExponent::Infinite => s.serialize_str("infinity"),
            EmbeddingExponent::Finite(q) => s.serialize_f64(*q),
        }
    }
}

/// `2(n - d)/(n - d - 2)` with `d` the minimal orbit dimension, or infinity
/// when `n - d <= 2`.
pub fn improved_embedding_exponent(g: &GroupDescriptor, n: u32) -> Result<EmbeddingExponent> {
    let d = min_orbit_dimension(g)?;
    let k = n as i64 - d as i64;
    if k <= 2 {
        Ok(EmbeddingExponent::Infinite)
    } else {
        Ok(EmbeddingExponent::Finite(2.0 * k as f64 / (k as f64 - 2.0)))
    }
}

/// Which subspace of the invariant harmonics to count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarmonicClass {
    /// All `G`-invariant harmonics.
    Invariant,
    /// `G`-invariant and even under the swap.
    SwapEven,
    /// `G`-invariant and odd under the swap (the `Gamma` class).
    SwapOdd,
}

/// Homogeneous polynomials of a fixed degree in `k` variables, by exponent vector.
fn monomials(k: usize, degree: usize) -> Vec<Vec<u8>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() + 1 == k {
            cur.push(left as u8);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e as u8);
            rec(k, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, degree, &mut Vec::with_capacity(k), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Above this many monomials the per-block count uses the classical
/// invariant-theory answer instead of the null-space computation.
const BRUTE_FORCE_CAP: usize = 2000;

/// Dimension of the `O(k)`-invariant homogeneous polynomials of `degree` in
/// `k` variables, computed as the common null space of the rotation
/// generators `x_a ∂_b - x_b ∂_a` and one reflection.
pub fn block_invariant_dim(k: usize, degree: usize) -> usize {
    let dim = binomial(degree + k - 1, k - 1);
    if dim > BRUTE_FORCE_CAP {
        // invariants of a single vector under O(k) are polynomials in |x|^2
        return usize::from(degree.is_multiple_of(2));
    }
    block_invariant_dim_brute(k, degree)
}

pub(crate) fn block_invariant_dim_brute(k: usize, degree: usize) -> usize {
    let basis = monomials(k, degree);
    let dim = basis.len();
    let index: HashMap<&[u8], usize> = basis.iter().enumerate().map(|(i, m)| (m.as_slice(), i)).collect();
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut add_operator = |op: &DMatrix<f64>| {
        gram += op.transpose() * op;
    };
    for a in 0..k {
        for b in a + 1..k {
            let mut op = DMatrix::<f64>::zeros(dim, dim);
            for (col, m) in basis.iter().enumerate() {
                let mut target = m.clone();
                if m[b] > 0 {
                    target[b] -= 1;
                    target[a] += 1;
                    op[(index[target.as_slice()], col)] += m[b] as f64;
                }
                let mut target = m.clone();
                if m[a] > 0 {
                    target[a] -= 1;
                    target[b] += 1;
                    op[(index[target.as_slice()], col)] -= m[a] as f64;
                }
            }
            add_operator(&op);
        }
    }
    // reflection x_0 -> -x_0, minus identity
    let mut refl = DMatrix::<f64>::zeros(dim, dim);
    for (col, m) in basis.iter().enumerate() {
        if m[0] % 2 == 1 {
            refl[(col, col)] = -2.0;
        }
    }
    add_operator(&refl);
    null_dimension(gram)
}

fn null_dimension(gram: DMatrix<f64>) -> usize {
    let dim = gram.nrows();
    if dim == 0 {
        return 0;
    }
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if top == 0.0 {
        return dim;
    }
    eig.eigenvalues.iter().filter(|&&v| v.abs() <= 1e-8 * top).count()
}

/// Counts of invariant harmonics for a two-block descriptor over a range of degrees.
#[derive(Debug, Clone)]
pub struct HarmonicCounter {
    parts: (usize, usize),
    has_swap: bool,
    block1: Vec<usize>,
    block2: Vec<usize>,
}

impl HarmonicCounter {
    pub fn new(g: &GroupDescriptor, max_degree: usize) -> Result<Self> {
        if g.parts.len() != 2 {
            return Err(Error::Unsupported(format!(
                "invariant harmonic counts are implemented for two blocks, got {:?}",
                g.parts
            )));
        }
        let (n1, n2) = (g.parts[0] as usize, g.parts[1] as usize);
        let block1: Vec<usize> = (0..=max_degree).map(|a| block_invariant_dim(n1, a)).collect();
        let block2 = if n1 == n2 {
            block1.clone()
        } else {
            (0..=max_degree).map(|a| block_invariant_dim(n2, a)).collect()
        };
        Ok(HarmonicCounter { parts: (n1, n2), has_swap: g.swap.is_some(), block1, block2 })
    }

    /// Invariant polynomials of degree `i` split by swap parity `(even, odd)`;
    /// without a swap everything is reported as even.
    fn polynomial_counts(&self, i: usize) -> (usize, usize) {
        let total: usize = (0..=i).map(|a| self.block1[a] * self.block2[i - a]).sum();
        if !self.has_swap {
            return (total, 0);
        }
        // the swap exchanges the two tensor factors; its trace on the
        // invariant space is the dimension of the diagonal term a = b
        let trace = if i.is_multiple_of(2) { self.block1[i / 2] } else { 0 };
        ((total + trace) / 2, (total - trace) / 2)
    }

    pub fn count(&self, degree: usize, class: HarmonicClass) -> Result<usize> {
        if degree >= self.block1.len() {
            return Err(Error::InvalidParams(format!("degree {degree} exceeds the prepared range")));
        }
        if class != HarmonicClass::Invariant && !self.has_swap {
            return Err(Error::NotApplicable(format!(
                "blocks {:?} admit no swap, so the swap classes are undefined",
                self.parts
            )));
        }
        // degree-i harmonics = P_i restricted to the sphere minus |x|^2 P_{i-2}
        let (even, odd) = self.polynomial_counts(degree);
        let (even_lo, odd_lo) = if degree >= 2 { self.polynomial_counts(degree - 2) } else { (0, 0) };
        Ok(match class {
            HarmonicClass::Invariant => (even + odd) - (even_lo + odd_lo),
            HarmonicClass::SwapEven => even - even_lo,
            HarmonicClass::SwapOdd => odd - odd_lo,
        })
    }
}

/// `dim Y_{G, degree}`, or `dim Y_{Gamma, degree}` when `antisymmetric`.
pub fn invariant_harmonic_dim(g: &GroupDescriptor, degree: usize, antisymmetric: bool) -> Result<usize> {
    let class = if antisymmetric { HarmonicClass::SwapOdd } else { HarmonicClass::Invariant };
    HarmonicCounter::new(g, degree)?.count(degree, class)
}

#[derive(Debug, Clone, Serialize)]
pub struct AtlasEntry {
    pub parts: Vec<u32>,
    pub swap: Option<(usize, usize)>,
    pub property_p: bool,
    pub min_orbit_dimension: u32,
    pub embedding_exponent: EmbeddingExponent,
    pub embedding_exceeds_two_star: bool,
    /// `dim Y_{G,i}` for `i = 0..=max_degree`; absent for more than two blocks.
    pub invariant_dims: Option<Vec<usize>>,
    /// `dim Y_{Gamma,i}` when a swap exists.
    pub gamma_dims: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtlasReport {
    pub n: u32,
    pub max_degree: usize,
    pub descriptors: Vec<AtlasEntry>,
    /// Block products only; other subgroups of `O(n+1)` are not searched.
    pub exhaustive: bool,
    pub note: String,
}

pub fn atlas(n: u32, max_degree: usize) -> Result<AtlasReport> {
    let two_star = 2.0 * n as f64 / (n as f64 - 2.0);
    let mut entries = Vec::new();
    for g in enumerate_descriptors(n)? {
        let d = min_orbit_dimension(&g)?;
        let exponent = improved_embedding_exponent(&g, n)?;
        let (invariant_dims, gamma_dims) = if g.parts.len() == 2 {
            let counter = HarmonicCounter::new(&g, max_degree)?;
            let inv = (0..=max_degree).map(|i| counter.count(i, HarmonicClass::Invariant)).collect::<Result<Vec<_>>>()?;
            let gam = if g.swap.is_some() {
                Some((0..=max_degree).map(|i| counter.count(i, HarmonicClass::SwapOdd)).collect::<Result<Vec<_>>>()?)
            } else {
                None
            };
            (Some(inv), gam)
        } else {
            (None, None)
        };
        entries.push(AtlasEntry {
            parts: g.parts.clone(),
            swap: g.swap,
            property_p: has_property_p(&g),
            min_orbit_dimension: d,
            embedding_exponent: exponent,
            embedding_exceeds_two_star: exponent.exceeds(two_star),
            invariant_dims,
            gamma_dims,
        });
    }
    Ok(AtlasReport {
        n,
        max_degree,
        descriptors: entries,
        exhaustive: false,
        note: "only block-product subgroups with a block-swap are examined; a false property flag does not rule out \
               other subgroups"
            .into(),
    })
}
