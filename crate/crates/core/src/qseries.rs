//! Euler expansions of the infinite q-Pochhammer product and the two
//! q-exponentials, in series and product form.
//!
//! Series are summed in double-double precision: for negative arguments the
//! terms alternate and can exceed the sum by several orders of magnitude.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofloat::TwoFloat;

use crate::error::{QError, Result};
use crate::qcore::{q_binomial, QParams, TruncationPolicy};
use crate::qprod::{one_plus_inf, pochhammer_fin};

/// Number of consecutive negligible terms required before stopping.
const SMALL_TERMS_TO_STOP: usize = 3;

/// Minimum gap accepted as evidence that `e_q^x e_q^y != e_q^{x+y}`.
pub const NONADDITIVITY_GAP: f64 = 1e-3;
/// Samples tried by [`nonadditivity_witness`].
pub const NONADDITIVITY_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// `|last term| / |partial sum|` at the stopping index.
    pub last_term_ratio: f64,
    pub terms_used: usize,
    /// Relative error bound: truncation plus double-double rounding.
    pub rel_err: f64,
}

/// Double-double quotient. `TwoFloat / TwoFloat` alone is only accurate to
/// about one `f64` ulp, so one Newton correction is applied.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let y = a / b;
    y + (a - y * b) / b.hi()
}

/// Sums `1 + t_1 + t_2 + ...` with `t_j = t_{j-1} * ratio(j)`.
///
/// `|ratio(j)|` must be nonincreasing once it drops below 1; the geometric
/// tail `|t_j| rho / (1 - rho)` with `rho = |ratio(j+1)|` then bounds
/// everything after `t_j`.
fn sum_series<F>(policy: &TruncationPolicy, mut ratio: F) -> Result<SeriesValue>
where
    F: FnMut(usize) -> TwoFloat,
{
    let eps = policy.eps_tail();
    let mut term = TwoFloat::from(1.0);
    let mut sum = TwoFloat::from(1.0);
    let mut max_term = 1.0f64;
    let mut small_run = 0usize;
    let mut next = ratio(1);
    let mut j = 0usize;
    let mut last_ratio = 1.0;
    loop {
        j += 1;
        if j > policy.max_terms() {
            return Err(QError::TruncationBudgetExceeded {
                max_terms: policy.max_terms(),
                achieved: last_ratio,
            });
        }
        term *= next;
        sum += term;
        next = ratio(j + 1);

        let t = f64::from(term).abs();
        let s = f64::from(sum).abs();
        max_term = max_term.max(t);
        last_ratio = if s > 0.0 { t / s } else { f64::INFINITY };
        if last_ratio <= eps {
            small_run += 1;
        } else {
            small_run = 0;
        }
        let rho = f64::from(next).abs();
        let tail_ok = rho < 1.0 && t * rho / (1.0 - rho) <= eps * s;
        if small_run >= SMALL_TERMS_TO_STOP && tail_ok {
            let value = f64::from(sum);
            let rounding = 8.0 * (j as f64) * 2f64.powi(-104) * max_term / s;
            return Ok(SeriesValue {
                value,
                last_term_ratio: last_ratio,
                terms_used: j,
                rel_err: eps + rounding + f64::EPSILON,
            });
        }
    }
}

/// Euler expansion of the infinite product: `sum_j q^(j(j-1)/2) x^j / ((1-q)...(1-q^j))`, which
/// equals `(1 + x)_q^inf` for every real `x`.
#[allow(non_snake_case)]
pub fn euler_series_E(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<SeriesValue> {
    check_finite(x)?;
    let q = p.q();
    let mut qpow = TwoFloat::from(1.0); // q^(j-1)
    sum_series(policy, move |_| {
        let qj = qpow * q;
        let r = dd_div(qpow * x, 1.0 - qj);
        qpow = qj;
        r
    })
}

/// Euler expansion of the reciprocal product: `sum_j x^j / ((1-q)...(1-q^j))`, equal to
/// `1 / (1 - x)_q^inf` for `|x| < 1`.
pub fn euler_series_e(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<SeriesValue> {
    check_finite(x)?;
    if x.abs() >= 1.0 {
        return Err(QError::domain(format!(
            "Euler series 1/(1-x)_q^inf needs |x| < 1, got {x}"
        )));
    }
    let q = p.q();
    let mut qj = TwoFloat::from(1.0);
    sum_series(policy, move |_| {
        qj *= q;
        dd_div(TwoFloat::from(x), 1.0 - qj)
    })
}

/// Radius of convergence of the `e_q` series, `1 / (1 - q)`.
pub fn e_q_radius(p: &QParams) -> f64 {
    1.0 / (1.0 - p.q())
}

/// Small q-exponential `e_q^x = sum_j x^j / [j]_q!` for `|x| < 1/(1-q)`.
pub fn e_q(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<SeriesValue> {
    check_finite(x)?;
    let q = p.q();
    if x.abs() * (1.0 - q) >= 1.0 {
        return Err(QError::domain(format!(
            "e_q^x needs |x| < 1/(1-q) = {}, got {x}",
            e_q_radius(p)
        )));
    }
    let mut qint = TwoFloat::from(0.0); // [j]_q
    sum_series(policy, move |_| {
        qint = qint * q + 1.0;
        dd_div(TwoFloat::from(x), qint)
    })
}

/// Big q-exponential `E_q^x = sum_j q^(j(j-1)/2) x^j / [j]_q!`, entire in `x`.
#[allow(non_snake_case)]
pub fn E_q(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<SeriesValue> {
    check_finite(x)?;
    let q = p.q();
    let mut qint = TwoFloat::from(0.0);
    let mut qpow = TwoFloat::from(1.0); // q^(j-1)
    sum_series(policy, move |_| {
        qint = qint * q + 1.0;
        let r = dd_div(qpow * x, qint);
        qpow *= q;
        r
    })
}

/// Product form `e_q^x = 1 / (1 - (1-q) x)_q^inf`.
pub fn e_q_product(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<f64> {
    let z = -(1.0 - p.q()) * x;
    if z <= -1.0 {
        return Err(QError::domain(format!(
            "e_q^x product form needs x < 1/(1-q), got {x}"
        )));
    }
    Ok(1.0 / one_plus_inf(z, p, policy)?.value)
}

/// Product form `E_q^x = (1 + (1-q) x)_q^inf`, for `(1-q) x >= -1`.
#[allow(non_snake_case)]
pub fn E_q_product(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<f64> {
    Ok(one_plus_inf((1.0 - p.q()) * x, p, policy)?.value)
}

/// `|E_q^{-x} e_q^x - 1|`.
pub fn exp_inverse_residual(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<f64> {
    let small = e_q(x, p, policy)?.value;
    let big = E_q(-x, p, policy)?.value;
    Ok((big * small - 1.0).abs())
}

/// `e_{1/q}^x`, the small exponential with base `1/q > 1`.
///
/// `[j]_{1/q}` grows like `q^{-j}`, so the series converges for every `x`.
/// This path works directly from `q` and never constructs a base above 1.
pub fn e_reciprocal_base(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<SeriesValue> {
    check_finite(x)?;
    let base = TwoFloat::from(1.0) / p.q();
    let mut qint = TwoFloat::from(0.0); // [j]_{1/q}
    sum_series(policy, move |_| {
        qint = qint * base + 1.0;
        dd_div(TwoFloat::from(x), qint)
    })
}

/// `|e_{1/q}^x - E_q^x|`.
pub fn e_recip_identity_residual(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<f64> {
    let lhs = e_reciprocal_base(x, p, policy)?.value;
    let rhs = E_q(x, p, policy)?.value;
    Ok((lhs - rhs).abs())
}

/// A pair `(x, y)` for which `e_q^x e_q^y` and `e_q^{x+y}` differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonAdditivity {
    pub x: f64,
    pub y: f64,
    pub gap: f64,
}

/// `|e_q^x e_q^y - e_q^{x+y}|`.
pub fn nonadditivity_gap(x: f64, y: f64, p: &QParams, policy: &TruncationPolicy) -> Result<f64> {
    let a = e_q(x, p, policy)?.value;
    let b = e_q(y, p, policy)?.value;
    let c = e_q(x + y, p, policy)?.value;
    Ok((a * b - c).abs())
}

/// Seeded search for a pair violating additivity of `e_q` by more than
/// [`NONADDITIVITY_GAP`]. Samples stay inside half the convergence radius so
/// that `x + y` is in range too.
pub fn nonadditivity_witness(
    p: &QParams,
    policy: &TruncationPolicy,
    seed: u64,
) -> Result<NonAdditivity> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * e_q_radius(p);
    for _ in 0..NONADDITIVITY_BUDGET {
        let x = rng.gen_range(-half..half);
        let y = rng.gen_range(-half..half);
        if let Ok(gap) = nonadditivity_gap(x, y, p, policy) {
            if gap > NONADDITIVITY_GAP {
                return Ok(NonAdditivity { x, y, gap });
            }
        }
    }
    Err(QError::WitnessNotFound {
        budget: NONADDITIVITY_BUDGET,
    })
}

/// Relative residuals of the two readings of Heine's binomial formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeineResiduals {
    /// Against `sum_{j=0}^{n} [n; j]_q x^j`.
    pub residual_printed: f64,
    /// Against `sum_{j>=0} [n+j-1; j]_q x^j`.
    pub residual_standard: f64,
}

/// Compares `1 / (1 - x)_q^n` with both the finite coefficient sum
/// `sum_j [n; j]_q x^j` and the standard expansion `sum_j [n+j-1; j]_q x^j`.
pub fn heine_diagnostic(
    x: f64,
    n: u32,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<HeineResiduals> {
    check_finite(x)?;
    if x.abs() >= 1.0 {
        return Err(QError::domain(format!(
            "Heine expansion needs |x| < 1, got {x}"
        )));
    }
    if n == 0 {
        return Err(QError::domain("Heine expansion needs n >= 1"));
    }
    let q = p.q();
    let lhs = 1.0 / pochhammer_fin(1.0, x, n, p);

    let mut printed = 0.0;
    let mut xj = 1.0;
    for j in 0..=n {
        printed += q_binomial(n, j, p) * xj;
        xj *= x;
    }

    // [n+j-1; j] / [n+j-2; j-1] = [n+j-1]_q / [j]_q
    let qint = |k: usize| -> TwoFloat {
        let qk = TwoFloat::from(q).powi(k as i32);
        (1.0 - qk) / (1.0 - q)
    };
    let standard = sum_series(policy, |j| {
        dd_div(TwoFloat::from(x) * qint(n as usize + j - 1), qint(j))
    })?
    .value;

    Ok(HeineResiduals {
        residual_printed: (lhs - printed).abs() / lhs.abs(),
        residual_standard: (lhs - standard).abs() / lhs.abs(),
    })
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(QError::domain(format!("argument must be finite, got {x}")))
    }
}
