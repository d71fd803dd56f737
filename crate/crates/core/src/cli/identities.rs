//! The identity suite: every exact or numerical identity of the library,
//! one record per check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{CheckKind, CheckRecord, Params};
use super::RunConfig;
use crate::error::{QError, Result};
use crate::qcore::{q_binomial, q_binomial_limit, QParams};
use crate::qdiff::{
    dq_exponential_residuals, dq_pochhammer_residual, pochhammer_real_fn, q_derivative, qmvt_solve,
    QMVT_DEFAULT_GRID,
};
use crate::qexact::{gauss_identity_check, gaussian_binomial_poly};
use crate::qprod::{lemma1_ratio_residual, one_plus_inf};
use crate::qseries::{
    e_recip_identity_residual, euler_series_E, euler_series_e, exp_inverse_residual,
    heine_diagnostic, nonadditivity_witness, NONADDITIVITY_GAP,
};

pub const LEMMA1_SAMPLES: usize = 1000;
pub const EXP_IDENTITY_SAMPLES: usize = 500;
pub const EXP_DERIVATIVE_SAMPLES: usize = 200;
/// Gap the printed finite Heine sum must exceed at `(n, x, q) = (1, 0.5, 0.5)`.
pub const HEINE_PRINTED_GAP: f64 = 0.05;

/// Identities whose evaluation chains several products get a looser bound.
const COMPOSITE_FACTOR: f64 = 100.0;

fn q_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn qp(q: f64) -> Result<QParams> {
    QParams::new(q)
}

/// Turns a residual computation into a record; truncation failures are
/// inconclusive, anything else is a failing record.
fn residual(id: &str, params: Params, bound: f64, r: Result<f64>) -> CheckRecord {
    match r {
        Ok(v) => CheckRecord::residual(id, params, v, bound),
        Err(QError::TruncationBudgetExceeded { .. }) | Err(QError::NonFinite(_)) => {
            CheckRecord::inconclusive(id, params, CheckKind::Residual)
        }
        Err(_) => CheckRecord::residual(id, params, f64::NAN, bound),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

pub fn gauss_exact(max_n: u32) -> Vec<CheckRecord> {
    (0..=max_n)
        .into_par_iter()
        .map(|n| {
            let params = Params {
                n: Some(n as i64),
                ..Default::default()
            };
            match gauss_identity_check(n) {
                Ok(ok) => {
                    CheckRecord::residual("gauss.exact", params, if ok { 0.0 } else { 1.0 }, 0.0)
                }
                Err(_) => CheckRecord::residual("gauss.exact", params, f64::NAN, 0.0),
            }
        })
        .collect()
}

/// Float q-binomials against the exact coefficient polynomials, worst
/// relative error over `j` for each `(n, q)`.
pub fn binomial_float_vs_exact(tol: f64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for n in 0..=20u32 {
        for &q in &[0.1, 0.5, 0.9] {
            let params = Params {
                q: Some(q),
                n: Some(n as i64),
                ..Default::default()
            };
            let r = (|| -> Result<f64> {
                let p = qp(q)?;
                let mut worst: f64 = 0.0;
                for j in 0..=n {
                    let exact = gaussian_binomial_poly(n, j)?.eval(q);
                    worst = worst.max(rel(q_binomial(n, j, &p), exact));
                }
                Ok(worst)
            })();
            out.push(residual("qbinom.exact", params, tol, r));
        }
    }
    out
}

pub fn binomial_limit(tol: f64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for &q in &[0.3, 0.5, 0.7, 0.9] {
        for j in 0..=10u32 {
            let params = Params {
                q: Some(q),
                n: Some(j as i64),
                ..Default::default()
            };
            let r = qp(q).map(|p| rel(q_binomial(1000, j, &p), q_binomial_limit(j, &p)));
            out.push(residual("qbinom.limit", params, tol, r));
        }
    }
    out
}

/// Euler expansion of the infinite product against the product itself.
pub fn euler_product(cfg: &RunConfig) -> Vec<CheckRecord> {
    let xs: Vec<f64> = (0..31).map(|i| -0.9 + 5.9 * i as f64 / 30.0).collect();
    let pts: Vec<(f64, f64)> = q_grid()
        .into_iter()
        .flat_map(|q| xs.iter().map(move |&x| (q, x)))
        .collect();
    pts.par_iter()
        .map(|&(q, x)| {
            let r = (|| {
                let p = qp(q)?;
                let s = euler_series_E(x, &p, &cfg.policy)?.value;
                Ok(rel(s, one_plus_inf(x, &p, &cfg.policy)?.value))
            })();
            residual("euler.product", Params::qx(q, x), cfg.tol, r)
        })
        .collect()
}

/// Euler expansion of the reciprocal product, `|x| <= 0.9`.
pub fn euler_reciprocal(cfg: &RunConfig) -> Vec<CheckRecord> {
    let xs: Vec<f64> = (-9..=9).map(|i| i as f64 / 10.0).collect();
    let pts: Vec<(f64, f64)> = q_grid()
        .into_iter()
        .flat_map(|q| xs.iter().map(move |&x| (q, x)))
        .collect();
    pts.par_iter()
        .map(|&(q, x)| {
            let r = (|| {
                let p = qp(q)?;
                let s = euler_series_e(x, &p, &cfg.policy)?.value;
                Ok(rel(s, 1.0 / one_plus_inf(-x, &p, &cfg.policy)?.value))
            })();
            residual("euler.reciprocal", Params::qx(q, x), cfg.tol, r)
        })
        .collect()
}

/// `(1 + x)_q^inf = (1 + x)(1 + qx)_q^inf`.
pub fn telescoping(cfg: &RunConfig) -> Vec<CheckRecord> {
    let xs = [-0.9, -0.5, 0.0, 0.5, 2.0, 10.0];
    let mut out = Vec::new();
    for q in q_grid() {
        for &x in &xs {
            let r = (|| {
                let p = qp(q)?;
                let a = one_plus_inf(x, &p, &cfg.policy)?.value;
                let b = (1.0 + x) * one_plus_inf(q * x, &p, &cfg.policy)?.value;
                Ok(rel(a, b))
            })();
            out.push(residual(
                "product.telescoping",
                Params::qx(q, x),
                cfg.tol,
                r,
            ));
        }
    }
    out
}

/// Lemma samples `(q, x, alpha, beta)` restricted to points where every
/// product in both identities is defined.
fn lemma_samples(seed: u64, count: usize) -> Vec<(f64, f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let q: f64 = rng.gen_range(0.1..0.9);
        let x: f64 = rng.gen_range(-0.9..5.0);
        let a: f64 = rng.gen_range(-3.0..3.0);
        let b: f64 = rng.gen_range(-3.0..3.0);
        let ok = |e: f64| q.powf(e) * x > -0.99;
        if ok(a) && ok(a + b) && ok(a + 1.0) && x != 0.0 {
            out.push((q, x, a, b));
        }
    }
    out
}

pub fn lemma1(cfg: &RunConfig) -> Vec<CheckRecord> {
    let samples = lemma_samples(cfg.seed, LEMMA1_SAMPLES);
    let bound = cfg.tol * COMPOSITE_FACTOR;
    let ratio = samples.par_iter().map(|&(q, x, a, b)| {
        let params = Params {
            alpha: Some(a),
            beta: Some(b),
            ..Params::qx(q, x)
        };
        let r = qp(q).and_then(|p| lemma1_ratio_residual(x, a, b, &p, &cfg.policy));
        residual("lemma1.ratio", params, bound, r)
    });
    let deriv = samples.par_iter().map(|&(q, x, a, _)| {
        let params = Params {
            alpha: Some(a),
            ..Params::qx(q, x)
        };
        let r = qp(q).and_then(|p| dq_pochhammer_residual(x, a, &p, &cfg.policy));
        residual("lemma1.derivative", params, bound, r)
    });
    let mut out: Vec<CheckRecord> = ratio.collect();
    out.extend(deriv.collect::<Vec<_>>());
    out
}

/// `(q, x)` with `q` in `(0.1, 0.9)` and `|x| < 0.5 / (1 - q)`.
fn exp_samples(seed: u64, count: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q: f64 = rng.gen_range(0.1..0.9);
            let r = 0.5 / (1.0 - q);
            (q, rng.gen_range(-r..r))
        })
        .collect()
}

pub fn exponentials(cfg: &RunConfig) -> Vec<CheckRecord> {
    let pol = &cfg.policy;
    let samples = exp_samples(cfg.seed.wrapping_add(1), EXP_IDENTITY_SAMPLES);
    let mut out: Vec<CheckRecord> = samples
        .par_iter()
        .map(|&(q, x)| {
            let r = qp(q).and_then(|p| exp_inverse_residual(x, &p, pol));
            residual("exp.inverse", Params::qx(q, x), cfg.tol, r)
        })
        .collect();
    out.extend(
        samples
            .par_iter()
            .map(|&(q, x)| {
                let r = qp(q).and_then(|p| e_recip_identity_residual(x, &p, pol));
                residual("exp.reciprocal_base", Params::qx(q, x), cfg.tol, r)
            })
            .collect::<Vec<_>>(),
    );

    let bound = cfg.tol * COMPOSITE_FACTOR;
    let samples = exp_samples(cfg.seed.wrapping_add(2), EXP_DERIVATIVE_SAMPLES);
    let pairs: Vec<[CheckRecord; 2]> = samples
        .par_iter()
        .map(|&(q, x)| {
            let params = Params::qx(q, x);
            match qp(q).and_then(|p| dq_exponential_residuals(x, &p, pol)) {
                Ok(r) => [
                    CheckRecord::residual("exp.derivative_E", params, r.res_big, bound),
                    CheckRecord::residual("exp.derivative_e", params, r.res_small, bound),
                ],
                Err(e) => [
                    residual("exp.derivative_E", params, bound, Err(e.clone())),
                    residual("exp.derivative_e", params, bound, Err(e)),
                ],
            }
        })
        .collect();
    out.extend(pairs.into_iter().flatten());

    for &q in &[0.3, 0.5, 0.9] {
        let params = Params {
            q: Some(q),
            ..Default::default()
        };
        let rec = match qp(q).and_then(|p| nonadditivity_witness(&p, pol, cfg.seed)) {
            Ok(w) => CheckRecord::margin(
                "exp.nonadditive",
                Params {
                    x: Some(w.x),
                    beta: None,
                    ..params
                },
                w.gap - NONADDITIVITY_GAP,
                0.0,
            ),
            Err(_) => CheckRecord::margin("exp.nonadditive", params, -NONADDITIVITY_GAP, 0.0),
        };
        out.push(rec);
    }
    out
}

pub fn heine(cfg: &RunConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for n in 1..=10u32 {
            for x in [-0.8, -0.4, 0.0, 0.4, 0.8] {
                let params = Params {
                    n: Some(n as i64),
                    ..Params::qx(q, x)
                };
                let r = qp(q)
                    .and_then(|p| heine_diagnostic(x, n, &p, &cfg.policy))
                    .map(|h| h.residual_standard);
                out.push(residual("heine.standard", params, cfg.tol, r));
            }
        }
    }
    // the finite sum with coefficients [n; j]_q is a different function
    let params = Params {
        n: Some(1),
        ..Params::qx(0.5, 0.5)
    };
    let rec = match qp(0.5).and_then(|p| heine_diagnostic(0.5, 1, &p, &cfg.policy)) {
        Ok(h) => CheckRecord::margin(
            "heine.printed_discrepancy",
            params,
            h.residual_printed - HEINE_PRINTED_GAP,
            0.0,
        ),
        Err(_) => CheckRecord::inconclusive("heine.printed_discrepancy", params, CheckKind::Margin),
    };
    out.push(rec);
    out
}

/// q-mean-value points for `t -> (1 + t)_q^alpha` on `[0.5, 2]`. A missing
/// point is reported as inconclusive rather than failing: existence is only
/// claimed for `q` close enough to 1.
pub fn mean_value(cfg: &RunConfig) -> Vec<CheckRecord> {
    let (a, b) = (0.5, 2.0);
    let mut out = Vec::new();
    for alpha in [0.5, 2.5] {
        for q in [0.9, 0.99] {
            let params = Params {
                alpha: Some(alpha),
                ..Params::qx(q, a)
            };
            let id = "qmvt.pochhammer";
            let r = (|| -> Result<Option<f64>> {
                let p = qp(q)?;
                let f = pochhammer_real_fn(alpha, p, cfg.policy);
                let Some(eta) = qmvt_solve(&f, a, b, &p, QMVT_DEFAULT_GRID)? else {
                    return Ok(None);
                };
                let rise = f.eval(b)? - f.eval(a)?;
                let slope = q_derivative(&f, eta, &p)? * (b - a);
                Ok(Some((slope - rise).abs() / (1.0 + rise.abs())))
            })();
            out.push(match r {
                Ok(Some(v)) => CheckRecord::residual(id, params, v, cfg.tol * COMPOSITE_FACTOR),
                Ok(None) => CheckRecord::inconclusive(id, params, CheckKind::Residual).non_fatal(),
                Err(e) => residual(id, params, cfg.tol, Err(e)),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_admissible_and_seeded() {
        let s = lemma_samples(3, 200);
        assert_eq!(s, lemma_samples(3, 200));
        for &(q, x, a, b) in &s {
            assert!(x > -1.0 && q.powf(a) * x > -1.0 && q.powf(a + b) * x > -1.0);
        }
        let e = exp_samples(3, 50);
        assert!(e.iter().all(|&(q, x)| x.abs() < 0.5 / (1.0 - q)));
    }

    #[test]
    fn small_sections_pass() {
        assert!(gauss_exact(6)
            .iter()
            .all(|r| r.pass == super::super::report::Status::Pass));
        assert!(binomial_limit(1e-10)
            .iter()
            .all(|r| r.pass == super::super::report::Status::Pass));
    }
}
