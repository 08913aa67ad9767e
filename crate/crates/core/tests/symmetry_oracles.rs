//! Brute-force linear algebra oracles for orbit dimensions and invariant harmonic counts.

use choquard_core::symmetry::{enumerate_descriptors, invariant_harmonic_dim, min_orbit_dimension, GroupDescriptor};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn block_ranges(parts: &[u32]) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    parts
        .iter()
        .map(|&p| {
            let r = start..start + p as usize;
            start += p as usize;
            r
        })
        .collect()
}

fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|&&s| s > tol * top.max(1.0)).count()
}

/// Tangent vectors `x_a e_b - x_b e_a` of the block rotation generators at `x`.
fn orbit_rank(parts: &[u32], x: &[f64]) -> usize {
    let dim = x.len();
    let mut cols = Vec::new();
    for r in block_ranges(parts) {
        for a in r.clone() {
            for b in (a + 1)..r.end {
                let mut v = vec![0.0; dim];
                v[b] += x[a];
                v[a] -= x[b];
                cols.push(v);
            }
        }
    }
    if cols.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(dim, cols.len(), |i, j| cols[j][i]);
    rank(&m, 1e-10)
}

#[test]
fn min_orbit_dimension_matches_generator_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 3u32..=7 {
        for g in enumerate_descriptors(n).unwrap() {
            let parts = g.parts().to_vec();
            let dim = (n + 1) as usize;
            let mut least = usize::MAX;
            for r in block_ranges(&parts) {
                // unit points supported in a single block sit on the smallest orbits
                for _ in 0..5 {
                    let mut x = vec![0.0; dim];
                    for i in r.clone() {
                        x[i] = rng.random_range(-1.0..1.0);
                    }
                    least = least.min(orbit_rank(&parts, &x));
                }
            }
            let generic: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let generic_rank = orbit_rank(&parts, &generic);
            assert!(least <= generic_rank);
            assert_eq!(min_orbit_dimension(&g).unwrap() as usize, least, "parts {parts:?}");
        }
    }
}

fn monomials(k: usize, degree: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for e in 0..=degree {
        for mut rest in monomials(k - 1, degree - e) {
            rest.insert(0, e);
            out.push(rest);
        }
    }
    out
}

fn eval_monomial(m: &[usize], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(&e, &t)| t.powi(e as i32)).product()
}

/// Random element of `O(n_1) x O(n_2)` built from Householder reflections.
fn random_group_element(parts: &[u32], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let dim: usize = parts.iter().sum::<u32>() as usize;
    let mut g = DMatrix::identity(dim, dim);
    for r in block_ranges(parts) {
        for _ in 0..3 {
            let mut v = DVector::zeros(dim);
            for i in r.clone() {
                v[i] = rng.random_range(-1.0..1.0);
            }
            let nv = v.norm();
            if nv < 1e-3 {
                continue;
            }
            v /= nv;
            let h = DMatrix::identity(dim, dim) - &v * v.transpose() * 2.0;
            g = h * g;
        }
    }
    g
}

/// Dimension of harmonic homogeneous polynomials of `degree` on `R^{n1+n2}`
/// fixed by sampled group elements, optionally odd under the block swap.
fn brute_harmonic_dim(parts: (u32, u32), degree: usize, odd_swap: bool, rng: &mut ChaCha8Rng) -> usize {
    let p = [parts.0, parts.1];
    let dim = (parts.0 + parts.1) as usize;
    let mons = monomials(dim, degree);
    let mut rows: Vec<Vec<f64>> = Vec::new();

    if degree >= 2 {
        let lower = monomials(dim, degree - 2);
        let index = |m: &Vec<usize>| lower.iter().position(|l| l == m).unwrap();
        let mut lap = vec![vec![0.0; mons.len()]; lower.len()];
        for (j, m) in mons.iter().enumerate() {
            for i in 0..dim {
                if m[i] >= 2 {
                    let mut t = m.clone();
                    t[i] -= 2;
                    lap[index(&t)][j] += (m[i] * (m[i] - 1)) as f64;
                }
            }
        }
        rows.extend(lap);
    }

    for _ in 0..(mons.len() + 10) {
        let g = random_group_element(&p, rng);
        let x = DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(-1.0..1.0)));
        let gx = &g * &x;
        rows.push(mons.iter().map(|m| eval_monomial(m, gx.as_slice()) - eval_monomial(m, x.as_slice())).collect());
    }
    if odd_swap {
        for _ in 0..(mons.len() + 10) {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n1 = parts.0 as usize;
            let tx: Vec<f64> = x[n1..].iter().chain(&x[..n1]).copied().collect();
            rows.push(mons.iter().map(|m| eval_monomial(m, &tx) + eval_monomial(m, &x)).collect());
        }
    }
    let a = DMatrix::from_fn(rows.len(), mons.len(), |i, j| rows[i][j]);
    mons.len() - rank(&a, 1e-9)
}

#[test]
fn harmonic_counts_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (parts, max_degree) in [((2u32, 2u32), 8usize), ((3, 2), 6), ((3, 3), 4)] {
        let g = GroupDescriptor::with_default_swap(vec![parts.0, parts.1]).unwrap();
        for d in 0..=max_degree {
            let expected = brute_harmonic_dim(parts, d, false, &mut rng);
            assert_eq!(invariant_harmonic_dim(&g, d, false).unwrap(), expected, "{parts:?} degree {d}");
            if parts.0 == parts.1 {
                let odd = brute_harmonic_dim(parts, d, true, &mut rng);
                assert_eq!(invariant_harmonic_dim(&g, d, true).unwrap(), odd, "{parts:?} odd degree {d}");
            }
        }
    }
}

#[test]
fn two_block_invariants_are_zonal_in_theta() {
    // one invariant harmonic in every even degree, none in odd degrees
    let g = GroupDescriptor::with_default_swap(vec![2, 2]).unwrap();
    for d in 0..=20 {
        let expected = usize::from(d % 2 == 0);
        assert_eq!(invariant_harmonic_dim(&g, d, false).unwrap(), expected);
        let odd = usize::from(d % 4 == 2);
        assert_eq!(invariant_harmonic_dim(&g, d, true).unwrap(), odd);
    }
}
