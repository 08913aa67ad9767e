use choquard_core::ledger::{
    boost_constraint_check, case1_pair_check, compute_n, h_ell, ledger_report, CaseTag, TargetSpace,
};
use choquard_core::{build_q_sequence, make_params, ProblemParams, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn params(n: u32, num: i64, den: i64) -> ProblemParams {
    make_params(n, Scalar::ratio(num, den)).unwrap()
}

/// `a = 2*_μ - 1` and the threshold `1/2* - μ/(2n)` from scratch.
fn oracle_parts(n: i64, mu: &BigRational) -> (BigRational, BigRational) {
    let nn = q(n, 1);
    let a = (q(2 * n, 1) - mu) / (&nn - q(2, 1)) - BigRational::one();
    let threshold = (&nn - q(2, 1)) / (q(2, 1) * &nn) - mu / (q(2, 1) * &nn);
    (a, threshold)
}

fn oracle_steps(n: i64, mu: &BigRational) -> u32 {
    let (a, threshold) = oracle_parts(n, mu);
    let mut sum = BigRational::zero();
    for m in 1..1000 {
        sum += a.recip().pow(m);
        if q(2, n) * &sum > threshold {
            return m as u32;
        }
    }
    unreachable!()
}

#[test]
fn five_one_takes_two_steps() {
    let p = params(5, 1, 1);
    assert_eq!(compute_n(&p).unwrap(), 2);
    let r = build_q_sequence(&p).unwrap();
    assert!(r.is_valid(), "{:?}", r.checks);
    assert_eq!(r.steps, Some(2));
    // 1/q_2 = a/q_1 - 2/n with a = 4/3
    assert_eq!(r.inverse_q_sequence[0].exact, "7/30");
    assert_eq!(r.inverse_q_sequence[1].exact, "1/15");
    assert_eq!(r.q_sequence[1].exact, "15");
    assert_eq!(r.case_tag, CaseTag::MuLtNMinus2);
    assert_eq!(r.target, TargetSpace::Lebesgue { exponent: "5".into() });
}

#[test]
fn rational_sweep_gates_hold() {
    for n in [3i64, 5, 6, 10] {
        for k in 1..=9i64 {
            let mu = q(k * (n - 2), 10);
            let p = make_params(n as u32, Scalar::Exact(mu.clone())).unwrap();
            let r = ledger_report(&p).unwrap();
            assert_eq!(r.steps, Some(oracle_steps(n, &mu)), "n {n} k {k}");
            assert!(r.checks["necessary_hl"], "n {n} k {k}");
            assert!(r.is_valid(), "n {n} k {k}: {:?}", r.checks);
            let (a, threshold) = oracle_parts(n, &mu);
            for h in 1..r.steps.unwrap() {
                let expected = a.recip().pow(h as i32)
                    + q(2, n) * (1..h as i32).map(|j| a.recip().pow(j)).fold(BigRational::zero(), |s, x| s + x);
                assert_eq!(h_ell(&p, h).unwrap(), expected);
                assert!(expected > threshold);
            }
        }
    }
}

#[test]
fn case1_window_is_nonempty_up_to_n() {
    for n in [3i64, 5, 6, 10] {
        let mut mus: Vec<BigRational> = (1..=9).map(|k| q(k * (n - 2), 10)).collect();
        mus.extend((0..10).map(|j| q(n - 2, 1) + q(2 * j, 10)));
        for mu in mus {
            let p = make_params(n as u32, Scalar::Exact(mu.clone())).unwrap();
            assert!(case1_pair_check(&p).unwrap(), "n {n} μ {mu}");
            let r = ledger_report(&p).unwrap();
            assert!(r.checks["case1_pair"]);
            // ((n - μ)/n)/2*_μ = (n - μ)(n - 2)/(n(2n - μ))
            let inv = (q(n, 1) - &mu) * q(n - 2, 1) / (q(n, 1) * (q(2 * n, 1) - &mu));
            assert!(boost_constraint_check(&p, &inv.recip()).unwrap());
        }
    }
}

#[test]
fn case_tags_and_targets() {
    let r = ledger_report(&params(5, 3, 1)).unwrap();
    assert_eq!(r.case_tag, CaseTag::MuEqNMinus2);
    assert_eq!(r.target, TargetSpace::AnyFiniteAbove { lower: "10/3".into() });
    assert!(r.steps.is_none());
    let r = ledger_report(&params(5, 7, 2)).unwrap();
    assert_eq!(r.case_tag, CaseTag::MuGtNMinus2);
    assert_eq!(r.target, TargetSpace::Infinity);
    assert!(compute_n(&params(5, 7, 2)).is_err());
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["case_tag"], "mu_gt_n_minus_2");
}

#[test]
fn h_monotonicity_switches_at_two() {
    for (num, den, sign) in [(1i64, 1i64, -1i32), (2, 1, 0), (5, 2, 1)] {
        let p = params(6, num, den);
        let h: Vec<BigRational> = (1..6).map(|l| h_ell(&p, l).unwrap()).collect();
        for w in h.windows(2) {
            let d = &w[1] - &w[0];
            match sign {
                -1 => assert!(d.is_negative()),
                0 => assert!(d.is_zero()),
                _ => assert!(d.is_positive()),
            }
        }
    }
}

#[test]
fn float_mu_is_decided_exactly() {
    let p = make_params(5, 1.0).unwrap();
    let r = ledger_report(&p).unwrap();
    assert!(!r.exact_input);
    assert_eq!(r.steps, Some(2));
    assert!(r.is_valid());
}

proptest! {
    #[test]
    fn h_difference_identity(n in 3i64..14, num in 1i64..200, ell in 1u32..7) {
        // μ = num/200 · (n - 2) stays inside (0, n - 2)
        let mu = q(num * (n - 2), 200);
        prop_assume!(mu < q(n - 2, 1));
        let p = make_params(n as u32, Scalar::Exact(mu.clone())).unwrap();
        let (a, _) = oracle_parts(n, &mu);
        let diff = h_ell(&p, ell + 1).unwrap() - h_ell(&p, ell).unwrap();
        let expected = (&mu - q(2, 1)) / (q(n, 1) * a.pow(ell as i32 + 1));
        prop_assert_eq!(diff, expected);
    }

    #[test]
    fn q_sequence_follows_recursion(n in 3i64..12, num in 1i64..100) {
        let mu = q(num * (n - 2), 100);
        prop_assume!(mu < q(n - 2, 1));
        let p = make_params(n as u32, Scalar::Exact(mu.clone())).unwrap();
        let r = build_q_sequence(&p).unwrap();
        prop_assert!(r.is_valid(), "{:?}", r.checks);
        prop_assert_eq!(r.steps, Some(oracle_steps(n, &mu)));
        let (a, _) = oracle_parts(n, &mu);
        let inv: Vec<BigRational> = r.inverse_q_sequence.iter().map(|x| x.exact.parse::<Scalar>().unwrap().to_rational().unwrap()).collect();
        for w in inv.windows(2) {
            prop_assert_eq!(&w[1], &(&a * &w[0] - q(2, n)));
        }
    }
}
