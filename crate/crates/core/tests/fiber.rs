use std::sync::Arc;

use kanlab::fiber::{
    center_intersection_search, intersection_oracle, iterate, ns_analyze, rational_independence,
    rotation_density_check, select_independent, ClosedInterval, FiberError, IntervalMap, Linear, Mobius,
    Polynomial, SearchBudget,
};
use proptest::prelude::*;

#[test]
fn ns_examples() {
    let m = ns_analyze(Arc::new(Polynomial { coeffs: vec![0.0, 0.5, 0.5] })).unwrap();
    assert!((m.alpha - 0.5).abs() < 1e-15);
    assert!((m.smallest_fixed - 1.0).abs() < 1e-12);

    let m = ns_analyze(Arc::new(Linear { slope: 0.5 })).unwrap();
    assert_eq!(m.smallest_fixed, 1.0);

    // t/2 + 3t^2/2 - t^3 fixes 0, 1/2 and 1
    let planted = Polynomial { coeffs: vec![0.0, 0.5, 1.5, -1.0] };
    assert!((planted.value(0.5) - 0.5).abs() < 1e-15);
    let m = ns_analyze(Arc::new(planted)).unwrap();
    assert!((m.smallest_fixed - 0.5).abs() < 1e-10);

    assert!(matches!(ns_analyze(Arc::new(Mobius { alpha: 1.5 })), Err(FiberError::NotContracting { .. })));
}

#[test]
fn independence_of_three_sevenths() {
    for b in [1.0, 0.3, -2.5] {
        for k in [7, 8, 50, 1000] {
            let v = rational_independence(3.0 * b / 7.0, b, k);
            assert!((v.value - b.abs() / 7.0).abs() < 1e-12 * b.abs(), "b = {b}, K = {k}: {v:?}");
        }
    }
}

#[test]
fn integer_multiples_are_not_mistaken_for_independent() {
    // 5 * b is not exactly representable, and reducing it mod b leaves a
    // residue near 1e-15 that must not count as a nonzero combination
    let b = 2.080971852246601;
    let v = rational_independence(5.0 * b, b, 1_000_000);
    assert!((v.value - b).abs() < 1e-12, "{v:?}");
}

#[test]
fn golden_ratio_independence_shrinks() {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut last = f64::INFINITY;
    for k in [1, 10, 100, 1000, 10_000] {
        let v = rational_independence(phi, 1.0, k).value;
        assert!(v <= last);
        last = v;
    }
    assert!(rational_independence(phi, 1.0, 1000).value < 1e-3);
}

#[test]
fn selection_needs_a_small_gap() {
    assert!(select_independent(0.3, 0.3, 1.0, 0.1).is_err());
    assert!(select_independent(0.3, 0.6, 1.0, 0.1).is_err());
    let (a, v) = select_independent(0.5, 0.5 + 1e-3, 1.0, 0.01).unwrap();
    assert!(v.value < 0.01);
    assert!(a == 0.5 || a == 0.5 + 1e-3);
}

#[test]
fn intervals_touching_the_boundary_are_rejected() {
    let f = Mobius { alpha: 0.5 };
    let edge = ClosedInterval::new(0.0, 0.5).unwrap();
    let inner = ClosedInterval::new(0.2, 0.5).unwrap();
    assert!(center_intersection_search(&f, &f, &f, &edge, &inner, &SearchBudget::default()).is_err());
}

fn unit_interval() -> impl Strategy<Value = ClosedInterval> {
    (0.02..0.7f64, 0.05..0.28f64).prop_map(|(lo, len)| ClosedInterval::new(lo, lo + len).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn independence_is_symmetric_and_scales(a in -5.0..5.0f64, b in 0.1..5.0f64, s in 0.1..10.0f64, k in 1u64..400) {
        let v = rational_independence(a, b, k);
        let scaled = rational_independence(s * a, s * b, k);
        prop_assert!((scaled.value - s * v.value).abs() <= 1e-9 * s * (a.abs() + b));
        let negated = rational_independence(-a, b, k);
        prop_assert!((negated.value - v.value).abs() <= 1e-9 * (a.abs() + b));
        let flipped = rational_independence(a, -b, k);
        prop_assert!((flipped.value - v.value).abs() <= 1e-9 * (a.abs() + b));
        // the witness pair reproduces the value
        let direct = (v.k as f64 * a + v.l as f64 * b).abs();
        prop_assert!((direct - v.value).abs() <= 1e-9 * (1.0 + direct));
    }

    #[test]
    fn independence_is_invariant_under_shifts(a in 0.0..1.0f64, j in -20i64..20, k in 1u64..200) {
        let v = rational_independence(a, 1.0, k).value;
        let w = rational_independence(a + j as f64, 1.0, k).value;
        prop_assert!((v - w).abs() < 1e-9);
    }

    #[test]
    fn independence_decreases_with_the_bound(a in 0.0..1.0f64, k in 1u64..500) {
        prop_assert!(rational_independence(a, 1.0, 2 * k).value <= rational_independence(a, 1.0, k).value);
    }

    #[test]
    fn small_independence_means_dense_rotation(p in 1i64..40, q in 1i64..40, irrational in any::<bool>(), eps in 0.01..0.5f64) {
        let a = if irrational { (p as f64).sqrt() + 1e-3 * q as f64 } else { p as f64 / q as f64 };
        let v = rational_independence(a, 1.0, 1_000_000).value;
        let d = rotation_density_check(a, 1.0, eps);
        prop_assert_eq!(v < eps, d.dense, "a = {}, value {:e}, gap {:e}", a, v, d.max_gap);
    }

    #[test]
    fn ns_rescaled_map_contracts_everything(alpha in 0.2..0.9f64, t in 0.01..0.99f64) {
        let m = ns_analyze(Arc::new(Mobius { alpha })).unwrap();
        let g = &m.rescaled;
        prop_assert!((g.value(1.0) - 1.0).abs() < 1e-12 && g.value(0.0).abs() < 1e-15);
        let mut x = t;
        let mut prev = t;
        for _ in 0..2000 {
            x = g.value(x);
            prop_assert!(x <= prev);
            prev = x;
        }
        prop_assert!(x < 1e-6);
        prop_assert!((iterate(g.as_ref(), iterate(g.as_ref(), t, 5), -5) - t).abs() < 1e-9);
    }

    #[test]
    fn certificate_pairs_are_oracle_pairs(
        a in 0.3..0.8f64,
        b in 0.3..0.8f64,
        c in 0.6..1.4f64,
        i in unit_interval(),
        j in unit_interval(),
    ) {
        let (f, g, h) = (Mobius { alpha: a }, Mobius { alpha: b }, Mobius { alpha: c });
        let budget = SearchBudget { max_k: 120, max_l: 120, min_pairs: 5, ..Default::default() };
        let cert = match center_intersection_search(&f, &g, &h, &i, &j, &budget) {
            Ok(c) => c,
            Err(FiberError::BudgetExhausted { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let oracle = intersection_oracle(&f, &g, &h, &i, &j, 120, 120).unwrap();
        for w in cert.pairs.windows(2) {
            prop_assert!(w[0].k < w[1].k && w[0].l < w[1].l);
        }
        for p in &cert.pairs {
            let o = oracle.iter().find(|o| o.k == p.k && o.l == p.l);
            prop_assert!(o.is_some(), "({}, {}) missing", p.k, p.l);
            prop_assert!((o.unwrap().overlap - p.overlap.length()).abs() <= 1e-12);
            let scale = a.powi(p.k as i32).max(b.powi(p.l as i32));
            prop_assert!(p.overlap.length() > 0.0);
            prop_assert!(p.overlap.length() >= cert.bound_constant * scale * (1.0 - 1e-12));
        }
    }
}
