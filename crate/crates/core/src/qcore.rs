//! Scalar q-arithmetic: q-numbers, q-integers, q-factorials and q-binomial
//! coefficients evaluated in `f64`.

use crate::error::{QError, Result};

/// Default lower bound for the base.
pub const Q_MIN: f64 = 1e-6;
/// Default upper bound for the base.
pub const Q_MAX: f64 = 1.0 - 1e-6;

/// A validated base `q` strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: f64,
}

impl QParams {
    /// Validates `q` against the default range `[Q_MIN, Q_MAX]`.
    pub fn new(q: f64) -> Result<Self> {
        Self::with_range(q, Q_MIN, Q_MAX)
    }

    /// Validates `q` against a caller-supplied range, for limit studies that
    /// need bases closer to 0 or 1 than the defaults allow. The range itself
    /// must lie strictly inside `(0, 1)`.
    pub fn with_range(q: f64, min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && max < 1.0 && min <= max) {
            return Err(QError::InvalidBase { q, min, max });
        }
        if !(q >= min && q <= max) {
            return Err(QError::InvalidBase { q, min, max });
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Truncation control shared by every infinite product and series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    eps_tail: f64,
    max_terms: usize,
}

impl TruncationPolicy {
    pub const DEFAULT_EPS_TAIL: f64 = 1e-14;
    pub const DEFAULT_MAX_TERMS: usize = 100_000;

    pub fn new(eps_tail: f64, max_terms: usize) -> Result<Self> {
        if !(eps_tail > 0.0 && eps_tail.is_finite()) {
            return Err(QError::InvalidPolicy(format!(
                "eps_tail must be positive, got {eps_tail}"
            )));
        }
        if max_terms == 0 {
            return Err(QError::InvalidPolicy("max_terms must be at least 1".into()));
        }
        Ok(Self {
            eps_tail,
            max_terms,
        })
    }

    #[inline]
    pub fn eps_tail(&self) -> f64 {
        self.eps_tail
    }

    #[inline]
    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    /// Same tolerance with a different term cap.
    pub fn with_max_terms(self, max_terms: usize) -> Result<Self> {
        Self::new(self.eps_tail, max_terms)
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            eps_tail: Self::DEFAULT_EPS_TAIL,
            max_terms: Self::DEFAULT_MAX_TERMS,
        }
    }
}

/// `[alpha]_q = (q^alpha - 1) / (q - 1)`.
///
/// The numerator is formed as `expm1(alpha * ln q)` so that it keeps full
/// relative accuracy when `q^alpha` is close to 1.
pub fn q_number(alpha: f64, p: &QParams) -> f64 {
    let q = p.q();
    (alpha * q.ln()).exp_m1() / (q - 1.0)
}

/// `[n]_q = 1 + q + ... + q^(n-1)` by direct summation.
pub fn q_integer(n: u32, p: &QParams) -> f64 {
    let q = p.q();
    let mut sum = 0.0;
    let mut pow = 1.0;
    for _ in 0..n {
        sum += pow;
        pow *= q;
    }
    sum
}

/// `[n]_q! = [n]_q [n-1]_q ... [1]_q`, with `[0]_q! = 1`.
pub fn q_factorial(n: u32, p: &QParams) -> f64 {
    (1..=n).map(|k| q_integer(k, p)).product()
}

/// Gaussian binomial coefficient `[n; j]_q`, zero when `j > n`.
///
/// Evaluated as `prod_{i=1}^{k} [n-k+i]_q / [i]_q` with `k = min(j, n-j)`,
/// which equals the factorial ratio but does not overflow for large `n`.
pub fn q_binomial(n: u32, j: u32, p: &QParams) -> f64 {
    if j > n {
        return 0.0;
    }
    let k = j.min(n - j);
    let mut acc = 1.0;
    for i in 1..=k {
        acc *= q_integer(n - k + i, p) / q_integer(i, p);
    }
    acc
}

/// `lim_{n -> inf} [n; j]_q = 1 / ((1-q)(1-q^2)...(1-q^j))`.
pub fn q_binomial_limit(j: u32, p: &QParams) -> f64 {
    let q = p.q();
    let mut denom = 1.0;
    let mut pow = 1.0;
    for _ in 0..j {
        pow *= q;
        denom *= 1.0 - pow;
    }
    1.0 / denom
}
