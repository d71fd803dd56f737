//! Jackson q-derivative, the derivative identities for `(1 + x)_q^alpha` and
//! the q-exponentials, and a constructive q-mean-value solver.

use std::fmt;
use std::sync::Arc;

use crate::error::{QError, Result};
use crate::qcore::{q_number, QParams, TruncationPolicy};
use crate::qprod::{log_one_plus_inf, one_plus_real, relative_residual};
use crate::qseries::{e_q, E_q};

/// Default number of interior mesh points used by [`qmvt_solve`].
pub const QMVT_DEFAULT_GRID: usize = 1024;
/// Maximum bisection steps in [`qmvt_solve`].
pub const QMVT_MAX_BISECTIONS: usize = 200;

/// Interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_open: true,
            hi_open: true,
        }
    }

    pub fn real_line() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, t: f64) -> bool {
        let above = if self.lo_open {
            t > self.lo
        } else {
            t >= self.lo
        };
        let below = if self.hi_open {
            t < self.hi
        } else {
            t <= self.hi
        };
        above && below
    }
}

type Eval = dyn Fn(f64) -> Result<f64> + Send + Sync;

/// A real function with a declared domain. Evaluating outside the domain is
/// an error; the function itself must be free of side effects.
#[derive(Clone)]
pub struct RealFunction {
    domain: Interval,
    f: Arc<Eval>,
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("domain", &self.domain)
            .finish()
    }
}

impl RealFunction {
    pub fn new<F>(domain: Interval, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::fallible(domain, move |t| Ok(f(t)))
    }

    pub fn fallible<F>(domain: Interval, f: F) -> Self
    where
        F: Fn(f64) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            domain,
            f: Arc::new(f),
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.domain.contains(t) {
            return Err(QError::domain(format!(
                "t = {t} outside [{}, {}]",
                self.domain.lo, self.domain.hi
            )));
        }
        (self.f)(t)
    }

    /// `t -> a f(t) + b g(t)` on the intersection of both domains.
    pub fn linear_combination(a: f64, f: &RealFunction, b: f64, g: &RealFunction) -> Self {
        let (fd, gd) = (f.domain, g.domain);
        let (lo, lo_open) = if fd.lo > gd.lo || (fd.lo == gd.lo && fd.lo_open) {
            (fd.lo, fd.lo_open)
        } else {
            (gd.lo, gd.lo_open)
        };
        let (hi, hi_open) = if fd.hi < gd.hi || (fd.hi == gd.hi && fd.hi_open) {
            (fd.hi, fd.hi_open)
        } else {
            (gd.hi, gd.hi_open)
        };
        let (f, g) = (f.clone(), g.clone());
        Self::fallible(
            Interval {
                lo,
                hi,
                lo_open,
                hi_open,
            },
            move |t| Ok(a * f.eval(t)? + b * g.eval(t)?),
        )
    }
}

/// `D_q f(x) = (f(qx) - f(x)) / ((q - 1) x)` for `x != 0`.
pub fn q_derivative(f: &RealFunction, x: f64, p: &QParams) -> Result<f64> {
    if x == 0.0 {
        return Err(QError::domain("q-derivative is undefined at x = 0"));
    }
    let q = p.q();
    let at_qx = f.eval(q * x)?;
    let at_x = f.eval(x)?;
    Ok((at_qx - at_x) / ((q - 1.0) * x))
}

/// `t -> (1 + t)_q^alpha` on the set where both infinite products exist.
pub fn pochhammer_real_fn(alpha: f64, p: QParams, policy: TruncationPolicy) -> RealFunction {
    // need t > -1 and q^alpha t > -1
    let lo = -(1.0f64).min((-alpha * p.q().ln()).exp());
    RealFunction::fallible(Interval::open(lo, f64::INFINITY), move |t| {
        Ok(one_plus_real(t, alpha, &p, &policy)?.value)
    })
}

/// Relative residual of `D_q (1 + x)_q^alpha = [alpha]_q (1 + qx)_q^{alpha-1}`,
/// with the right side evaluated as `(1 + qx)_q^inf / (1 + q^alpha x)_q^inf`.
pub fn dq_pochhammer_residual(
    x: f64,
    alpha: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<f64> {
    if !(x > -1.0) {
        return Err(QError::domain(format!("need x > -1, got {x}")));
    }
    let f = pochhammer_real_fn(alpha, *p, *policy);
    let lhs = q_derivative(&f, x, p)?;

    let q = p.q();
    let num = log_one_plus_inf(q * x, p, policy)?;
    let den = log_one_plus_inf((alpha * q.ln()).exp() * x, p, policy)?;
    let ratio = f64::from(num.log - den.log).exp();
    let rhs = q_number(alpha, p) * ratio;
    Ok(relative_residual(lhs, rhs))
}

/// Residuals of `D_q E_q^x = E_q^{qx}` and `D_q e_q^x = e_q^x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpDerivativeResiduals {
    pub res_big: f64,
    pub res_small: f64,
}

pub fn dq_exponential_residuals(
    x: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<ExpDerivativeResiduals> {
    if x == 0.0 {
        return Err(QError::domain("q-derivative is undefined at x = 0"));
    }
    let q = p.q();
    let pol = *policy;
    let pp = *p;
    let big = RealFunction::fallible(Interval::real_line(), move |t| Ok(E_q(t, &pp, &pol)?.value));
    let radius = 1.0 / (1.0 - q);
    let small = RealFunction::fallible(Interval::open(-radius, radius), move |t| {
        Ok(e_q(t, &pp, &pol)?.value)
    });

    let d_big = q_derivative(&big, x, p)?;
    let res_big = relative_residual(d_big, E_q(q * x, p, policy)?.value);
    let d_small = q_derivative(&small, x, p)?;
    let res_small = relative_residual(d_small, e_q(x, p, policy)?.value);
    Ok(ExpDerivativeResiduals { res_big, res_small })
}

/// Searches `(a, b)` for `eta` with `f(b) - f(a) = D_q f(eta) (b - a)`.
///
/// `h(eta) = D_q f(eta) (b - a) - (f(b) - f(a))` is sampled on `grid`
/// interior points; the first sign change is bisected until
/// `|h| < 1e-12 (1 + |f(b) - f(a)|)`. Returns `None` when no sign change is
/// found, which is a legitimate outcome for `q` away from 1.
pub fn qmvt_solve(
    f: &RealFunction,
    a: f64,
    b: f64,
    p: &QParams,
    grid: usize,
) -> Result<Option<f64>> {
    if !(a > 0.0) {
        return Err(QError::domain(format!("q-MVT needs 0 < a, got a = {a}")));
    }
    if !(a < b) {
        return Err(QError::domain(format!(
            "q-MVT needs a < b, got a = {a}, b = {b}"
        )));
    }
    if grid == 0 {
        return Err(QError::domain("grid must have at least one point"));
    }
    let rise = f.eval(b)? - f.eval(a)?;
    let tol = 1e-12 * (1.0 + rise.abs());
    let h = |eta: f64| -> Result<f64> { Ok(q_derivative(f, eta, p)? * (b - a) - rise) };

    let step = (b - a) / (grid as f64 + 1.0);
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..=grid {
        let eta = a + step * i as f64;
        let v = h(eta)?;
        if v.abs() < tol {
            return Ok(Some(eta));
        }
        if let Some((pe, pv)) = prev {
            if pv.signum() != v.signum() {
                return bisect(&h, pe, pv, eta, tol).map(Some);
            }
        }
        prev = Some((eta, v));
    }
    Ok(None)
}

fn bisect<H>(h: &H, mut lo: f64, mut h_lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    H: Fn(f64) -> Result<f64>,
{
    let mut best = (lo, h_lo.abs());
    for _ in 0..QMVT_MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let v = h(mid)?;
        if v.abs() < best.1 {
            best = (mid, v.abs());
        }
        if v.abs() < tol {
            return Ok(mid);
        }
        if v.signum() == h_lo.signum() {
            lo = mid;
            h_lo = v;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs() {
            break;
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(q: f64) -> QParams {
        QParams::new(q).unwrap()
    }

    fn monomial(n: i32) -> RealFunction {
        RealFunction::new(Interval::real_line(), move |t| t.powi(n))
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(q_derivative(&monomial(2), 2.0, &qp(0.5)).unwrap(), 3.0);
        let c = RealFunction::new(Interval::real_line(), |_| 4.2);
        assert_eq!(q_derivative(&c, 1.3, &qp(0.5)).unwrap(), 0.0);
        assert_eq!(q_derivative(&monomial(3), 1.0, &qp(0.5)).unwrap(), 1.75);
        assert!(matches!(
            q_derivative(&monomial(2), 0.0, &qp(0.5)),
            Err(QError::Domain(_))
        ));
    }

    #[test]
    fn domain_is_enforced() {
        let f = RealFunction::new(Interval::closed(1.0, 2.0), |t| t);
        assert!(f.eval(1.5).is_ok());
        assert!(f.eval(0.99).is_err());
        // qx = 0.75 falls outside [1, 2]
        assert!(q_derivative(&f, 1.5, &qp(0.5)).is_err());
    }

    #[test]
    fn monomials_give_q_integers() {
        let p = qp(0.7);
        for n in 1..=10 {
            for &x in &[-1.3, 0.4, 2.0] {
                let d = q_derivative(&monomial(n), x, &p).unwrap();
                let expect = q_number(n as f64, &p) * x.powi(n - 1);
                assert!((d - expect).abs() <= 1e-12 * expect.abs(), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn classical_limit() {
        let d = q_derivative(&monomial(2), 1.0, &qp(1.0 - 1e-6)).unwrap();
        assert!((d - 2.0).abs() < 1e-5);
    }

    #[test]
    fn lemma_derivative_examples() {
        let pol = TruncationPolicy::default();
        for &x in &[-0.5, 0.3, 2.0] {
            assert!(dq_pochhammer_residual(x, 1.0, &qp(0.5), &pol).unwrap() < 1e-10);
        }
        assert!(dq_pochhammer_residual(0.5, 2.0, &qp(0.5), &pol).unwrap() < 1e-8);
        assert!(dq_pochhammer_residual(-0.5, 2.5, &qp(0.8), &pol).unwrap() < 1e-8);
        assert!(dq_pochhammer_residual(0.0, 2.5, &qp(0.8), &pol).is_err());
    }

    #[test]
    fn exponential_derivatives() {
        let pol = TruncationPolicy::default();
        let r = dq_exponential_residuals(0.5, &qp(0.5), &pol).unwrap();
        assert!(r.res_big < 1e-8 && r.res_small < 1e-8);
        let r = dq_exponential_residuals(-0.3, &qp(0.7), &pol).unwrap();
        assert!(r.res_big < 1e-8 && r.res_small < 1e-8);
        assert!(dq_exponential_residuals(0.0, &qp(0.5), &pol).is_err());
    }

    #[test]
    fn qmvt_square_has_closed_form() {
        let eta = qmvt_solve(&monomial(2), 0.1, 1.0, &qp(0.5), QMVT_DEFAULT_GRID)
            .unwrap()
            .unwrap();
        assert!((eta - 1.1 / 1.5).abs() < 1e-10);
    }

    #[test]
    fn qmvt_linear_returns_first_point() {
        let f = RealFunction::new(Interval::real_line(), |t| 3.0 * t - 1.0);
        let eta = qmvt_solve(&f, 0.5, 2.0, &qp(0.4), 9).unwrap().unwrap();
        assert!((eta - (0.5 + 1.5 / 10.0)).abs() < 1e-15);
    }

    #[test]
    fn qmvt_rejects_bad_interval() {
        let f = monomial(2);
        assert!(qmvt_solve(&f, 0.0, 1.0, &qp(0.5), 10).is_err());
        assert!(qmvt_solve(&f, 1.0, 1.0, &qp(0.5), 10).is_err());
    }

    #[test]
    fn qmvt_can_have_no_witness() {
        // D_q t^2 = (1+q) t; on (1, 1.1) with q = 0.1 we would need
        // eta = 2.1 / 1.1 > b.
        assert_eq!(
            qmvt_solve(&monomial(2), 1.0, 1.1, &qp(0.1), 64).unwrap(),
            None
        );
    }
}
