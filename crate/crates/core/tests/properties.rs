//! Invariants checked on random inputs.

mod common;

use proptest::prelude::*;
use qbernoulli::ineq::{
    bernoulli_raw_difference, margin_cor1, margin_cor6, margin_cor_final, margin_prop1,
    margin_thm1, margin_thm2, IneqForm,
};
use qbernoulli::qcore::{q_binomial, q_integer, q_number};
use qbernoulli::qprod::{lemma1_ratio_residual, one_plus_inf, one_plus_real};
use qbernoulli::qseries::{e_q, exp_inverse_residual, E_q};
use qbernoulli::{QParams, TruncationPolicy};

fn qp(q: f64) -> QParams {
    QParams::new(q).unwrap()
}

fn pol() -> TruncationPolicy {
    TruncationPolicy::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn q_number_recurrence(q in 0.01f64..0.99, a in -5.0f64..5.0) {
        let p = qp(q);
        let lhs = q_number(a + 1.0, &p);
        let rhs = 1.0 + q * q_number(a, &p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn binomial_pascal_rule(q in 0.05f64..0.95, n in 1u32..40, j in 1u32..40) {
        prop_assume!(j <= n);
        let p = qp(q);
        let lhs = q_binomial(n, j, &p);
        let rhs = q_binomial(n - 1, j - 1, &p) + q.powi(j as i32) * q_binomial(n - 1, j, &p);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * lhs);
    }

    #[test]
    fn telescoping_product(q in 0.05f64..0.95, x in -0.99f64..20.0) {
        let p = qp(q);
        let a = one_plus_inf(x, &p, &pol()).unwrap();
        let b = one_plus_inf(q * x, &p, &pol()).unwrap();
        let rhs = (1.0 + x) * b.value;
        prop_assert!((a.value - rhs).abs() <= (a.rel_err() + b.rel_err() + 1e-15) * a.value.abs() + 1e-300);
    }

    #[test]
    fn integer_order_is_finite_product(q in 0.05f64..0.95, x in -0.99f64..10.0, n in 0u32..25) {
        let p = qp(q);
        let v = one_plus_real(x, n as f64, &p, &pol()).unwrap();
        let f = common::pochhammer_fin(1.0, -x, n, q);
        prop_assert!(common::rel(v.value, f) < 1e-11);
    }

    #[test]
    fn lemma_ratio_identity(q in 0.1f64..0.9, x in -0.9f64..5.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        prop_assume!(q.powf(a) * x > -0.99 && q.powf(a + b) * x > -0.99);
        let r = lemma1_ratio_residual(x, a, b, &qp(q), &pol()).unwrap();
        prop_assert!(r < 1e-12, "residual {r:e}");
    }

    #[test]
    fn exponentials_are_inverse(q in 0.1f64..0.9, u in -0.5f64..0.5) {
        let p = qp(q);
        let x = u / (1.0 - q);
        prop_assert!(exp_inverse_residual(x, &p, &pol()).unwrap() < 1e-12);
        let small = e_q(x, &p, &pol()).unwrap().value;
        let big = E_q(x, &p, &pol()).unwrap().value;
        // E_q^x / e_q^x = prod (1 - (1-q)^2 x^2 q^{2j}) <= 1
        prop_assert!(small >= big * (1.0 - 1e-14));
    }

    #[test]
    fn thm1_holds(q in 0.01f64..0.99, x in -0.999f64..50.0, n in 1u32..60) {
        let m = margin_thm1(x, n, &qp(q)).unwrap();
        prop_assert!(m.err >= 0.0);
        prop_assert!(m.certified_nonnegative(), "{m:?}");
    }

    #[test]
    fn thm2_holds_for_nonnegative_x(q in 0.05f64..0.95, x in 0.0f64..20.0, a in 0.05f64..8.0) {
        let m = margin_thm2(x, a, &qp(q), &pol()).unwrap();
        prop_assert!(m.certified_nonnegative(), "{m:?}");
    }

    #[test]
    fn raw_direction_below_one(q in 0.05f64..0.95, x in 0.0f64..20.0, a in 0.01f64..0.99) {
        let raw = bernoulli_raw_difference(x, a, &qp(q), &pol()).unwrap();
        prop_assert!(raw.value <= raw.err, "{raw:?}");
    }

    #[test]
    fn integer_alpha_reduces(q in 0.05f64..0.95, x in -0.99f64..10.0, n in 1u32..=10) {
        let p = qp(q);
        let a = margin_thm2(x, n as f64, &p, &pol()).unwrap();
        let b = margin_thm1(x, n, &p).unwrap();
        let scale = 1.0 + q_integer(n, &p) * x.abs();
        prop_assert!((a.value - b.value).abs() <= a.err + b.err + 1e-13 * scale, "{a:?} {b:?}");
    }

    #[test]
    fn beta_zero_collapses(q in 0.05f64..0.95, x in -0.99f64..10.0, a in 0.05f64..6.0) {
        let p = qp(q);
        let pr = margin_prop1(x, a, 0.0, &p, &pol()).unwrap();
        let t2 = margin_thm2(x, a, &p, &pol()).unwrap();
        prop_assert!((pr.value - t2.value).abs() <= pr.err + t2.err);
        let c6 = margin_cor6(x, a, 0.0, &p, &pol()).unwrap();
        let cf = margin_cor_final(x, a, &p, &pol()).unwrap();
        prop_assert!((c6.value - cf.value).abs() <= c6.err + cf.err);
    }

    #[test]
    fn cor1_nonnegative_order_holds(q in 0.05f64..0.95, x in -0.99f64..10.0, m in 1u32..8, n in 0i64..8) {
        let r = margin_cor1(x, m, n, &qp(q)).unwrap();
        prop_assert!(r.certified_nonnegative(), "{r:?}");
    }

    #[test]
    fn cor1_negative_order_holds_where_factors_positive(q in 0.05f64..0.95, x in -0.99f64..10.0, m in 1u32..8, n in -6i64..0) {
        let form = IneqForm::Cor1 { m, n };
        let p = qp(q);
        prop_assume!(form.guaranteed(x, &p));
        if let Ok(r) = form.margin(x, &p, &pol()) {
            prop_assert!(r.certified_nonnegative(), "{r:?}");
        }
    }
}
