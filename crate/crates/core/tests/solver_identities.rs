use std::f64::consts::PI;
use std::sync::OnceLock;

use choquard_core::solver::detect_sign_change;
use choquard_core::{assemble_kernel, build_grid, make_params, ChoquardProblem, FieldFunction, Scalar, SolveOptions, SymmetryClass};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(n: u32, mu: Scalar, parts: (u32, u32), size: usize) -> ChoquardProblem {
    let params = make_params(n, mu).unwrap();
    let grid = build_grid(&params, parts, size).unwrap();
    let kernel = assemble_kernel(&grid).unwrap();
    ChoquardProblem::new(grid, kernel).unwrap()
}

fn n3_mu2() -> &'static ChoquardProblem {
    static CELL: OnceLock<ChoquardProblem> = OnceLock::new();
    CELL.get_or_init(|| problem(3, Scalar::integer(2), (2, 2), 64))
}

fn random_field(pr: &ChoquardProblem, rng: &mut ChaCha8Rng, modes: usize) -> FieldFunction {
    let g = pr.grid();
    let m = g.modes();
    let mut values = vec![0.0; g.len()];
    for k in 0..modes {
        let c: f64 = rng.random_range(-1.0..1.0) / (1.0 + k as f64);
        for (i, v) in values.iter_mut().enumerate() {
            *v += c * m[(i, k)];
        }
    }
    FieldFunction::new(values, SymmetryClass::G)
}

fn fd_error(pr: &ChoquardProblem, v: &FieldFunction, phi: &FieldFunction) -> f64 {
    let eps = 1e-5;
    let ep = pr.energy(&v.axpy(eps, phi)).unwrap().total;
    let em = pr.energy(&v.axpy(-eps, phi)).unwrap().total;
    let fd = (ep - em) / (2.0 * eps);
    let exact = pr.grid().h1_inner(&pr.gradient(v).unwrap(), phi).unwrap();
    (fd - exact).abs() / exact.abs()
}

#[test]
fn gradient_matches_central_differences() {
    let points = [
        (3u32, Scalar::integer(2), (2u32, 2u32)),
        (4, Scalar::integer(1), (3, 2)),
        (5, Scalar::integer(3), (3, 3)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for (n, mu, parts) in points {
        let pr = problem(n, mu, parts, 32);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let v = random_field(&pr, &mut rng, 10);
            let phi = random_field(&pr, &mut rng, 10);
            worst = worst.max(fd_error(&pr, &v, &phi));
        }
        assert!(worst < 1e-6, "n {n}: {worst}");
    }
}

#[test]
fn constant_solution_solves_the_scalar_equation() {
    let pr = n3_mu2();
    let c = pr.constant_solution();
    let oracle = (3.0 / (8.0 * PI * PI)).powf(1.0 / 6.0);
    assert!((c - oracle).abs() < 1e-12);
    let opts = SolveOptions::default();
    let r = pr.solve_critical_point(SymmetryClass::G, &pr.grid().constant(0.3), &opts, &[]).unwrap();
    assert!(r.converged && r.residual < 1e-8);
    for v in &r.field.values {
        assert!((v - oracle).abs() < 1e-7);
    }
    assert_eq!(r.label, "bubble_lift");
}

#[test]
fn accepted_points_satisfy_nehari_and_energy_identities() {
    let pr = n3_mu2();
    let out = pr.solve_sequence(SymmetryClass::G, 3, &SolveOptions::default()).unwrap();
    assert_eq!(out.solutions.len(), 3, "{:?}", out.warnings);
    let p = pr.p();
    let mut last = f64::NEG_INFINITY;
    for s in &out.solutions {
        assert!(s.converged && s.residual < 1e-7);
        let h2 = s.h1_norm * s.h1_norm;
        assert!(s.nehari_defect.abs() < 1e-7 * h2);
        let identity = (0.5 - 1.0 / (2.0 * p)) * h2;
        assert!((s.energy.total - identity).abs() / identity < 1e-6);
        assert!(s.energy.total > last);
        last = s.energy.total;
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let u = &out.solutions[a].field;
        let v = &out.solutions[b].field;
        let d = pr.grid().h1_norm(&u.axpy(-1.0, v)).unwrap().min(pr.grid().h1_norm(&u.axpy(1.0, v)).unwrap());
        assert!(d > 1e-4 * out.solutions[b].h1_norm);
    }
    assert!(!out.solutions[0].sign_change);
    assert!(out.solutions[1].sign_change);
}

#[test]
fn gamma_solutions_are_antisymmetric() {
    let pr = n3_mu2();
    let out = pr.solve_sequence(SymmetryClass::Gamma, 1, &SolveOptions::default()).unwrap();
    let s = &out.solutions[0];
    assert!(s.converged && s.sign_change);
    let v = &s.field.values;
    let n = v.len();
    let asym = (0..n).map(|i| (v[i] + v[n - 1 - i]).abs()).fold(0.0, f64::max);
    assert!(asym < 1e-10 * s.field.max_abs());
    assert!(s.nodal_thetas.iter().any(|t| (t - PI / 4.0).abs() < 1e-6));
    let (changes, roots) = detect_sign_change(pr.grid(), &s.field).unwrap();
    assert!(changes);
    assert_eq!(roots, s.nodal_thetas);
}

#[test]
fn gamma_needs_equal_blocks() {
    let pr = problem(4, Scalar::integer(1), (3, 2), 16);
    assert!(pr.solve_sequence(SymmetryClass::Gamma, 1, &SolveOptions::default()).is_err());
}

#[test]
fn mountain_pass_geometry() {
    let pr = n3_mu2();
    let r = pr.mountain_pass_geometry_check(4, 200, 1).unwrap();
    assert!(r.min_tail_energy > 0.0);
    assert_eq!(r.head_dimension, 2);
    assert!(r.all_directions_negative);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_is_even_and_reflection_invariant(coef in prop::collection::vec(-1.0f64..1.0, 8)) {
        let pr = n3_mu2();
        let g = pr.grid();
        let m = g.modes();
        let values = (0..g.len()).map(|i| coef.iter().enumerate().map(|(k, c)| c * m[(i, k)]).sum()).collect();
        let v = FieldFunction::new(values, SymmetryClass::G);
        let e = pr.energy(&v).unwrap().total;
        let scale = e.abs().max(1.0);
        prop_assert!((pr.energy(&v.scaled(-1.0)).unwrap().total - e).abs() < 1e-12 * scale);
        let r = g.reflect(&v).unwrap();
        prop_assert!((pr.energy(&r).unwrap().total - e).abs() < 1e-9 * scale);
    }

    #[test]
    fn nehari_projection_zeroes_the_defect(coef in prop::collection::vec(-1.0f64..1.0, 6)) {
        let pr = n3_mu2();
        let g = pr.grid();
        let m = g.modes();
        let values = (0..g.len()).map(|i| coef.iter().enumerate().map(|(k, c)| c * m[(i, k)]).sum()).collect();
        let v = FieldFunction::new(values, SymmetryClass::G);
        prop_assume!(v.max_abs() > 1e-3);
        let w = pr.nehari_project(&v).unwrap();
        let h = g.h1_norm(&w).unwrap();
        prop_assert!(pr.nehari_defect(&w).unwrap().abs() < 1e-9 * h * h);
    }
}
