//! q-Pochhammer products: finite, negative-order, infinite and real-order.
//!
//! Infinite products are accumulated as a sum of `ln(1 + q^j x)` in
//! double-double precision and exponentiated once, so large products do not
//! overflow and products near `x = -1` do not underflow. Truncation stops at
//! the first index `N` whose geometric tail bound
//! `q^N |x| / ((1 - q)(1 - q^N |x|))` on the remaining log-sum is below
//! `eps_tail`.

use twofloat::TwoFloat;

use crate::error::{QError, Result};
use crate::qcore::{QParams, TruncationPolicy};

/// Relative threshold below which a factor of a negative-order product is
/// treated as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-300;

/// An infinite-product evaluation with its certified truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundedValue {
    pub value: f64,
    /// Bound on the neglected part of the log-sum; the relative truncation
    /// error of `value` is at most `expm1(tail_bound)`.
    pub tail_bound: f64,
    pub terms_used: usize,
    /// First-order relative rounding bound accumulated during evaluation.
    pub rounding_bound: f64,
}

impl TailBoundedValue {
    fn exact(value: f64) -> Self {
        Self {
            value,
            tail_bound: 0.0,
            terms_used: 0,
            rounding_bound: 0.0,
        }
    }

    /// Total relative error bound (truncation plus rounding).
    pub fn rel_err(&self) -> f64 {
        self.tail_bound.exp_m1() + self.rounding_bound
    }

    pub fn abs_err(&self) -> f64 {
        self.value.abs() * self.rel_err()
    }
}

/// `(x - a)_q^n = prod_{j=0}^{n-1} (x - q^j a)`; empty product for `n = 0`.
pub fn pochhammer_fin(x: f64, a: f64, n: u32, p: &QParams) -> f64 {
    let q = p.q();
    let mut acc = 1.0;
    let mut qj = 1.0;
    for _ in 0..n {
        acc *= x - qj * a;
        qj *= q;
    }
    acc
}

/// `(x - a)_q^{-n} = 1 / (x - q^{-n} a)_q^n` for `n >= 1`.
pub fn pochhammer_neg(x: f64, a: f64, n: u32, p: &QParams) -> Result<f64> {
    if n == 0 {
        return Err(QError::domain("negative-order Pochhammer needs n >= 1"));
    }
    let q = p.q();
    let shifted = a * q.powi(-(n as i32));
    let mut acc = 1.0;
    let mut qj = 1.0;
    for j in 0..n {
        let factor = x - qj * shifted;
        if factor.abs() < SINGULAR_THRESHOLD {
            return Err(QError::SingularPoint { j });
        }
        acc *= factor;
        qj *= q;
    }
    Ok(1.0 / acc)
}

/// `(1 + x)_q^n` for any integer `n`, through the finite or negative-order
/// definition.
pub fn pochhammer_one_plus(x: f64, n: i64, p: &QParams) -> Result<f64> {
    let order = u32::try_from(n.unsigned_abs())
        .map_err(|_| QError::domain(format!("order {n} out of range")))?;
    if n >= 0 {
        Ok(pochhammer_fin(1.0, -x, order, p))
    } else {
        pochhammer_neg(1.0, -x, order, p)
    }
}

/// Logarithm of `(1 + x)_q^inf` before exponentiation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogProduct {
    pub log: TwoFloat,
    pub tail_bound: f64,
    pub terms_used: usize,
    pub rounding_bound: f64,
}

fn tail_after(q: f64, qn_abs_x: f64) -> f64 {
    if qn_abs_x >= 1.0 {
        f64::INFINITY
    } else {
        qn_abs_x / ((1.0 - q) * (1.0 - qn_abs_x))
    }
}

pub(crate) fn log_one_plus_inf(
    x: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<LogProduct> {
    if !x.is_finite() || x < -1.0 {
        return Err(QError::domain(format!(
            "(1 + x)_q^inf needs x >= -1, got x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(LogProduct {
            log: TwoFloat::from(0.0),
            tail_bound: 0.0,
            terms_used: 0,
            rounding_bound: 0.0,
        });
    }
    if x == -1.0 {
        return Ok(LogProduct {
            log: TwoFloat::from(f64::NEG_INFINITY),
            tail_bound: 0.0,
            terms_used: 1,
            rounding_bound: 0.0,
        });
    }

    let q = p.q();
    let ax = x.abs();
    let eps = policy.eps_tail();
    let max_terms = policy.max_terms();

    // Predicted stopping index; a prediction beyond the budget fails fast.
    let c = eps * (1.0 - q);
    let predicted = ((c / ((1.0 + c) * ax)).ln() / q.ln()).ceil().max(0.0);
    if predicted > max_terms as f64 {
        let achieved = tail_after(q, q.powf(max_terms as f64) * ax);
        return Err(QError::TruncationBudgetExceeded {
            max_terms,
            achieved,
        });
    }

    let mut log = TwoFloat::from(0.0);
    let mut qj = TwoFloat::from(1.0);
    let mut sensitivity = 0.0;
    let mut j = 0usize;
    loop {
        let t_abs = f64::from(qj) * ax;
        let tail = tail_after(q, t_abs);
        if tail <= eps {
            let rounding = 2.0 * f64::EPSILON * (sensitivity + f64::from(log).abs() + 2.0);
            return Ok(LogProduct {
                log,
                tail_bound: tail,
                terms_used: j,
                rounding_bound: rounding,
            });
        }
        if j >= max_terms {
            return Err(QError::TruncationBudgetExceeded {
                max_terms,
                achieved: tail,
            });
        }
        let t = f64::from(qj) * x;
        let l = t.ln_1p();
        log += l;
        sensitivity += l.abs() + 2.0 * t.abs() / (1.0 + t);
        qj *= q;
        j += 1;
    }
}

fn exp_two(v: TwoFloat) -> f64 {
    let hi = v.hi();
    if hi == f64::NEG_INFINITY {
        return 0.0;
    }
    hi.exp() * (1.0 + v.lo())
}

/// `(1 + x)_q^inf = prod_{j>=0} (1 + q^j x)` for `x >= -1`, with the exact
/// value 0 at `x = -1`.
pub fn one_plus_inf(x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<TailBoundedValue> {
    let lp = log_one_plus_inf(x, p, policy)?;
    if lp.log.hi() == f64::NEG_INFINITY {
        return Ok(TailBoundedValue {
            terms_used: lp.terms_used,
            ..TailBoundedValue::exact(0.0)
        });
    }
    Ok(TailBoundedValue {
        value: exp_two(lp.log),
        tail_bound: lp.tail_bound,
        terms_used: lp.terms_used,
        rounding_bound: lp.rounding_bound,
    })
}

/// `(1 + x)_q^alpha = (1 + x)_q^inf / (1 + q^alpha x)_q^inf` for real `alpha`.
///
/// Both factors must be defined, so `x >= -1` and `q^alpha x > -1`.
pub fn one_plus_real(
    x: f64,
    alpha: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<TailBoundedValue> {
    if !alpha.is_finite() {
        return Err(QError::domain(format!("alpha must be finite, got {alpha}")));
    }
    if alpha == 0.0 {
        // numerator and denominator coincide
        if !x.is_finite() || x < -1.0 {
            return Err(QError::domain(format!("x must be >= -1, got {x}")));
        }
        return Ok(TailBoundedValue::exact(1.0));
    }
    let shifted = (alpha * p.q().ln()).exp() * x;
    let num = log_one_plus_inf(x, p, policy)?;
    let den = log_one_plus_inf(shifted, p, policy)?;
    if den.log.hi() == f64::NEG_INFINITY {
        return Err(QError::domain(format!(
            "(1 + q^alpha x)_q^inf vanishes at x = {x}, alpha = {alpha}"
        )));
    }
    let tail_bound = num.tail_bound + den.tail_bound;
    let terms_used = num.terms_used.max(den.terms_used);
    if num.log.hi() == f64::NEG_INFINITY {
        return Ok(TailBoundedValue {
            value: 0.0,
            tail_bound,
            terms_used,
            rounding_bound: 0.0,
        });
    }
    let diff = num.log - den.log;
    Ok(TailBoundedValue {
        value: exp_two(diff),
        tail_bound,
        terms_used,
        rounding_bound: num.rounding_bound + den.rounding_bound,
    })
}

/// Relative residual of `(1 + x)_q^alpha = (1 + x)_q^{alpha+beta} / (1 + q^alpha x)_q^beta`.
pub fn lemma1_ratio_residual(
    x: f64,
    alpha: f64,
    beta: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let lhs = one_plus_real(x, alpha, p, policy)?.value;
    let shifted = (alpha * p.q().ln()).exp() * x;
    let num = one_plus_real(x, alpha + beta, p, policy)?.value;
    let den = one_plus_real(shifted, beta, p, policy)?.value;
    let rhs = num / den;
    Ok(relative_residual(lhs, rhs))
}

/// `|a - b| / (|a| + |b|)`, defined as 0 when both vanish.
pub fn relative_residual(a: f64, b: f64) -> f64 {
    let scale = a.abs() + b.abs();
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
