//! Exponent bookkeeping for the integrability bootstrap of critical points.
//!
//! A solution `u ∈ D^{1,2}` is upgraded step by step from `L^{q_k}` to
//! `L^{q_{k+1}}` with `1/q_{k+1} = (2*_μ - 1)/q_k - 2/n`. The functions here
//! pick the starting exponent, count the steps and decide every strict
//! inequality along the way in exact rational arithmetic. A float `μ` is
//! converted to the dyadic rational it represents, so decisions are exact
//! for it as well.
//!
//! The smallness threshold `ε(n, μ, q)` of the local estimate has no explicit
//! value; it is carried as an opaque positive symbol and never checked.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{format_rational, rational_to_f64, ProblemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    #[serde(rename = "mu_lt_n_minus_2")]
    MuLtNMinus2,
    #[serde(rename = "mu_eq_n_minus_2")]
    MuEqNMinus2,
    #[serde(rename = "mu_gt_n_minus_2")]
    MuGtNMinus2,
}

/// Space the truncated Riesz potential of `|u|^{2*_μ}` lands in.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpace {
    /// `L^{exponent}` with `exponent = 2n/(n - 2 - μ)`.
    Lebesgue { exponent: String },
    /// Every `L^q` with `q` in the open interval `(lower, ∞)`.
    AnyFiniteAbove { lower: String },
    Infinity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseClassification {
    pub tag: CaseTag,
    pub target: TargetSpace,
}

fn rat(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

struct Exponents {
    n: BigRational,
    mu: BigRational,
    /// `2*_μ - 1`
    a: BigRational,
    /// `1/2* - μ/(2n)`
    threshold: BigRational,
    two_over_n: BigRational,
    inv_two_star: BigRational,
    inv_two_star_mu: BigRational,
}

fn exponents(params: &ProblemParams) -> Result<Exponents> {
    let mu = params
        .mu()
        .to_rational()
        .ok_or_else(|| Error::InvalidParams(format!("μ = {} has no rational value", params.mu())))?;
    let n = rat(params.n() as i64);
    let two = rat(2);
    let two_star_mu = (&two * &n - &mu) / (&n - &two);
    let inv_two_star = (&n - &two) / (&two * &n);
    let threshold = &inv_two_star - &mu / (&two * &n);
    Ok(Exponents {
        a: &two_star_mu - BigRational::one(),
        two_over_n: &two / &n,
        inv_two_star_mu: two_star_mu.recip(),
        inv_two_star,
        threshold,
        n,
        mu,
    })
}

impl Exponents {
    fn in_bootstrap_range(&self) -> bool {
        self.mu.is_positive() && self.mu < &self.n - rat(2)
    }

    fn require_bootstrap_range(&self) -> Result<()> {
        if self.in_bootstrap_range() {
            Ok(())
        } else {
            Err(Error::NotApplicable(format!(
                "the step count is defined for 0 < μ < n - 2, got μ = {}",
                format_rational(&self.mu)
            )))
        }
    }

    /// `(2/n) Σ_{k=1}^m a^{-k}`
    fn partial_sum(&self, m: u32) -> BigRational {
        let inv = self.a.recip();
        let mut pow = BigRational::one();
        let mut sum = BigRational::zero();
        for _ in 0..m {
            pow *= &inv;
            sum += &pow;
        }
        &self.two_over_n * sum
    }

    fn h(&self, ell: u32) -> BigRational {
        let inv = self.a.recip();
        let mut pow = BigRational::one();
        for _ in 0..ell {
            pow *= &inv;
        }
        pow + self.partial_sum(ell - 1)
    }

    /// `((n - μ)/n) · 1/2*_μ`
    fn case1_inverse(&self) -> BigRational {
        (&self.n - &self.mu) / &self.n * &self.inv_two_star_mu
    }
}

pub fn classify_case(params: &ProblemParams) -> Result<CaseClassification> {
    let e = exponents(params)?;
    let gap = &e.n - rat(2) - &e.mu;
    Ok(if gap.is_positive() {
        CaseClassification {
            tag: CaseTag::MuLtNMinus2,
            target: TargetSpace::Lebesgue { exponent: format_rational(&(rat(2) * &e.n / gap)) },
        }
    } else if gap.is_zero() {
        CaseClassification {
            tag: CaseTag::MuEqNMinus2,
            target: TargetSpace::AnyFiniteAbove { lower: format_rational(&e.inv_two_star.recip()) },
        }
    } else {
        CaseClassification { tag: CaseTag::MuGtNMinus2, target: TargetSpace::Infinity }
    })
}

/// Least `m` with `(2/n) Σ_{k=1}^m (2*_μ - 1)^{-k} > 1/2* - μ/(2n)`.
pub fn compute_n(params: &ProblemParams) -> Result<u32> {
    let e = exponents(params)?;
    e.require_bootstrap_range()?;
    let inv = e.a.recip();
    let mut pow = BigRational::one();
    let mut sum = BigRational::zero();
    for m in 1..=10_000u32 {
        pow *= &inv;
        sum += &pow;
        if &e.two_over_n * &sum > e.threshold {
            return Ok(m);
        }
    }
    Err(Error::Inconsistent("partial sums never exceed the threshold".into()))
}

/// `H_1 = (2*_μ - 1)^{-1}`, `H_ℓ = (2*_μ - 1)^{-ℓ} + (2/n) Σ_{k=1}^{ℓ-1} (2*_μ - 1)^{-k}`.
pub fn h_ell(params: &ProblemParams, ell: u32) -> Result<BigRational> {
    if ell == 0 {
        return Err(Error::InvalidParams("H_ℓ is defined for ℓ ≥ 1".into()));
    }
    let e = exponents(params)?;
    e.require_bootstrap_range()?;
    Ok(e.h(ell))
}

fn window_contains(e: &Exponents, inv_q: &BigRational) -> bool {
    &e.threshold < inv_q && inv_q < &e.inv_two_star
}

/// Whether `1/2* - μ/(2n) < 1/q < 1/2*`.
pub fn boost_constraint_check(params: &ProblemParams, q: &BigRational) -> Result<bool> {
    if !q.is_positive() {
        return Err(Error::InvalidParams(format!("exponent q = {} must be positive", format_rational(q))));
    }
    Ok(window_contains(&exponents(params)?, &q.recip()))
}

/// Same window test for `1/q` given directly; `0` stands for `q = ∞`.
pub fn boost_constraint_check_inverse(params: &ProblemParams, inv_q: &BigRational) -> Result<bool> {
    Ok(window_contains(&exponents(params)?, inv_q))
}

/// Whether the exponent `((n - μ)/n) / 2*_μ` lies strictly inside the window.
pub fn case1_pair_check(params: &ProblemParams) -> Result<bool> {
    let e = exponents(params)?;
    Ok(window_contains(&e, &e.case1_inverse()))
}

/// A rational exponent in exact and display form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactValue {
    pub exact: String,
    pub approx: f64,
}

impl From<&BigRational> for ExactValue {
    fn from(q: &BigRational) -> Self {
        ExactValue { exact: format_rational(q), approx: rational_to_f64(q) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerReport {
    pub n: u32,
    pub mu: String,
    pub exact_input: bool,
    pub case_tag: CaseTag,
    pub target: TargetSpace,
    /// Number of bootstrap steps, present for `0 < μ < n - 2`.
    #[serde(rename = "N")]
    pub steps: Option<u32>,
    /// Admissible open interval for `1/q_1`.
    pub window: Option<(ExactValue, ExactValue)>,
    /// `1/q_1, …, 1/q_N`.
    pub inverse_q_sequence: Vec<ExactValue>,
    pub q_sequence: Vec<ExactValue>,
    /// `H_1, …, H_{N-1}`.
    pub h_values: Vec<ExactValue>,
    pub checks: BTreeMap<String, bool>,
    pub smallness_threshold: String,
}

impl LedgerReport {
    pub fn is_valid(&self) -> bool {
        self.checks.values().all(|&b| b)
    }
}

fn base_report(params: &ProblemParams, e: &Exponents) -> Result<LedgerReport> {
    let class = classify_case(params)?;
    let mut checks = BTreeMap::new();
    checks.insert("case1_pair".to_string(), window_contains(e, &e.case1_inverse()));
    Ok(LedgerReport {
        n: params.n(),
        mu: params.mu().to_string(),
        exact_input: params.mu().is_exact(),
        case_tag: class.tag,
        target: class.target,
        steps: None,
        window: None,
        inverse_q_sequence: Vec::new(),
        q_sequence: Vec::new(),
        h_values: Vec::new(),
        checks,
        smallness_threshold: "epsilon(n, mu, q) > 0, not computed".to_string(),
    })
}

/// Builds the bootstrap sequence for `0 < μ < n - 2`, starting from the
/// midpoint of the admissible window for `1/q_1`.
pub fn build_q_sequence(params: &ProblemParams) -> Result<LedgerReport> {
    let e = exponents(params)?;
    e.require_bootstrap_range()?;
    let steps = compute_n(params)?;
    let mut report = base_report(params, &e)?;

    let h: Vec<BigRational> = (1..steps).map(|l| e.h(l)).collect();
    let mut upper = e.partial_sum(steps).min(e.case1_inverse());
    if let Some(m) = h.iter().min() {
        upper = upper.min(m.clone());
    }
    let lower = e.threshold.clone();
    if upper <= lower {
        return Err(Error::Inconsistent(format!(
            "empty window for 1/q_1: ({}, {})",
            format_rational(&lower),
            format_rational(&upper)
        )));
    }
    let mut inv = vec![(&lower + &upper) / rat(2)];
    for _ in 1..steps {
        let last = inv.last().unwrap();
        inv.push(&e.a * last - &e.two_over_n);
    }

    let gate = &e.two_over_n / &e.a;
    let nk = steps as usize;
    let c = &mut report.checks;
    c.insert("n_minimal".into(), steps == 1 || e.partial_sum(steps - 1) <= e.threshold);
    c.insert("necessary_hl".into(), h.iter().all(|x| x > &e.threshold));
    c.insert("q1_in_window".into(), window_contains(&e, &inv[0]));
    c.insert("q_positive_finite".into(), inv.iter().all(|x| x.is_positive()));
    c.insert("qN_large".into(), inv[nk - 1] < gate);
    c.insert("qk_small".into(), inv[..nk - 1].iter().all(|x| x > &gate));
    c.insert(
        "recursion_in_unit_interval".into(),
        inv[..nk - 1].iter().all(|x| {
            let y = &e.a * x;
            e.two_over_n < y && y < BigRational::one()
        }),
    );

    report.steps = Some(steps);
    report.window = Some(((&lower).into(), (&upper).into()));
    report.q_sequence = inv.iter().map(|x| (&x.recip()).into()).collect();
    report.inverse_q_sequence = inv.iter().map(Into::into).collect();
    report.h_values = h.iter().map(Into::into).collect();
    Ok(report)
}

/// Report for any admissible `μ`: the full bootstrap when `0 < μ < n - 2`,
/// otherwise the case classification and the single-step exponent check.
pub fn ledger_report(params: &ProblemParams) -> Result<LedgerReport> {
    let e = exponents(params)?;
    if e.in_bootstrap_range() {
        build_q_sequence(params)
    } else {
        base_report(params, &e)
    }
}
