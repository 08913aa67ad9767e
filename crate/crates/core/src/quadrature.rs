//! Quadrature rules: Gauss–Jacobi via Golub–Welsch, adaptive Gauss–Kronrod,
//! and a tanh-sinh rule for integrands with endpoint singularities.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Nodes (ascending) and weights of an `m`-point Gauss rule.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `∫_{-1}^{1} (1-x)^alpha (1+x)^beta dx`.
pub fn jacobi_mass(alpha: f64, beta: f64) -> f64 {
    ((alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
        - ln_gamma(alpha + beta + 2.0))
    .exp()
}

/// Three-term recurrence coefficients `(a_k, b_k)` of the monic Jacobi
/// polynomials: `p_{k+1} = (x - a_k) p_k - b_k p_{k-1}`.
fn jacobi_recurrence(m: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    let ab = alpha + beta;
    for k in 0..m {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        a[k] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
        if k == 1 {
            b[k] = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab));
        } else if k > 1 {
            b[k] = 4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0));
        }
    }
    (a, b)
}

/// Gauss–Jacobi rule for the weight `(1-x)^alpha (1+x)^beta` on `[-1, 1]`.
///
/// Nodes come from the Jacobi matrix eigenvalues, are polished by Newton
/// steps on the orthonormal recurrence, and weights use the Christoffel
/// function. For `alpha == beta` the rule is made exactly symmetric.
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
    if m == 0 {
        return Err(Error::InvalidParams("quadrature order must be positive".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::InvalidParams(format!("Jacobi exponents ({alpha}, {beta}) must exceed -1")));
    }
    let (a, b) = jacobi_recurrence(m, alpha, beta);
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        jm[(k, k)] = a[k];
        if k + 1 < m {
            let off = b[k + 1].sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let mass = jacobi_mass(alpha, beta);
    // orthonormal values p_0..p_m at x, normalised so that ∫ p_k^2 w = 1
    let eval = |x: f64| -> (Vec<f64>, f64) {
        let mut p = vec![0.0; m + 1];
        let mut dp = vec![0.0; m + 1];
        p[0] = 1.0 / mass.sqrt();
        for k in 0..m {
            let bk1 = if k + 1 < m { b[k + 1].sqrt() } else { monic_b(m, alpha, beta).sqrt() };
            let prev = if k > 0 { p[k - 1] } else { 0.0 };
            let dprev = if k > 0 { dp[k - 1] } else { 0.0 };
            let bk = if k > 0 { b[k].sqrt() } else { 0.0 };
            p[k + 1] = ((x - a[k]) * p[k] - bk * prev) / bk1;
            dp[k + 1] = (p[k] + (x - a[k]) * dp[k] - bk * dprev) / bk1;
        }
        let dm = dp[m];
        (p, dm)
    };
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dm) = eval(*x);
            if dm != 0.0 {
                let dx = p[m] / dm;
                *x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
        }
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (p, _) = eval(x);
            1.0 / p[..m].iter().map(|v| v * v).sum::<f64>()
        })
        .collect();

    if alpha == beta {
        for i in 0..m / 2 {
            let j = m - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
    }
    Ok(GaussRule { nodes, weights })
}

fn monic_b(k: usize, alpha: f64, beta: f64) -> f64 {
    let kf = k as f64;
    let ab = alpha + beta;
    let s = 2.0 * kf + ab;
    if k == 1 {
        4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
    } else {
        4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kron += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of a smooth integrand.
pub fn adaptive_gk(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    let mut segments = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..2000 {
        let total: f64 = segments.iter().map(|s| s.2).sum();
        let err: f64 = segments.iter().map(|s| s.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = segments.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
    Err(Error::Numerical("adaptive Gauss–Kronrod did not converge".into()))
}

/// Tanh-sinh integration over `[-1, 1]`.
///
/// The integrand receives `(x, 1 - x, 1 + x)` with the two complements
/// computed without cancellation, so weights like `(1 - x)^{-a}` can be
/// evaluated accurately next to the endpoints. Levels are refined until two
/// successive estimates agree to `rel_tol`.
pub fn tanh_sinh(f: impl Fn(f64, f64, f64) -> f64, rel_tol: f64) -> Result<f64> {
    use std::f64::consts::FRAC_PI_2;
    let t_max = 6.5;
    let term = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        // 1 - tanh(u) = 2 / (e^{2u} + 1)
        let e2u = (2.0 * u).exp();
        let one_minus = 2.0 / (e2u + 1.0);
        let one_plus = 2.0 / (1.0 / e2u + 1.0);
        let x = one_plus - 1.0;
        if one_minus <= 0.0 || one_plus <= 0.0 {
            return 0.0;
        }
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        let v = f(x, one_minus, one_plus);
        if v.is_finite() { w * v } else { 0.0 }
    };
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > t_max {
            break;
        }
        sum += term(t) + term(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let mut k = 1;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                break;
            }
            sum += term(t) + term(-t);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() <= rel_tol * next.abs() {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::Numerical("tanh-sinh quadrature did not reach requested accuracy".into()))
}
