//! Exact integer polynomial arithmetic in `q` and `x`.
//!
//! Finite q-identities (the q-Pascal rule, the Gauss binomial expansion of
//! `(1 + x)_q^n`) are checked here coefficient by coefficient with
//! arbitrary-precision integers, so a passing check carries no rounding.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{QError, Result};

/// Largest `n` accepted by the constructors in this module.
pub const EXACT_CAP: u32 = 64;

fn check_cap(n: u32) -> Result<()> {
    if n > EXACT_CAP {
        Err(QError::CapExceeded { n, cap: EXACT_CAP })
    } else {
        Ok(())
    }
}

/// Polynomial in `q` with integer coefficients, stored sparsely by degree.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntPoly {
    coeffs: BTreeMap<u32, BigInt>,
}

impl IntPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, BigInt::one())
    }

    pub fn monomial(deg: u32, c: BigInt) -> Self {
        let mut p = Self::zero();
        p.add_term(deg, c);
        p
    }

    /// `[k]_q = 1 + q + ... + q^(k-1)`.
    pub fn q_integer(k: u32) -> Self {
        let mut p = Self::zero();
        for d in 0..k {
            p.add_term(d, BigInt::one());
        }
        p
    }

    /// `[k]_q!` as a polynomial.
    pub fn q_factorial(k: u32) -> Self {
        (1..=k).fold(Self::one(), |acc, i| &acc * &Self::q_integer(i))
    }

    fn add_term(&mut self, deg: u32, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(deg).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&deg);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest degree with a nonzero coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, deg: u32) -> BigInt {
        self.coeffs.get(&deg).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &BigInt)> {
        self.coeffs.iter().map(|(d, c)| (*d, c))
    }

    /// Multiply by `q^k`.
    pub fn shift(&self, k: u32) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(d, c)| (d + k, c.clone()))
                .collect(),
        }
    }

    /// Exact quotient `self / divisor`, or `None` when the division leaves a
    /// remainder or the divisor's leading coefficient does not divide evenly.
    pub fn div_exact(&self, divisor: &IntPoly) -> Option<IntPoly> {
        let dd = divisor.degree()?;
        let lead = divisor.coeff(dd);
        let mut rem = self.clone();
        let mut quot = IntPoly::zero();
        while let Some(rd) = rem.degree() {
            if rd < dd {
                return None;
            }
            let rc = rem.coeff(rd);
            if !(&rc % &lead).is_zero() {
                return None;
            }
            let c = rc / &lead;
            let shift = rd - dd;
            for (d, dc) in divisor.terms() {
                rem.add_term(d + shift, -(dc * &c));
            }
            quot.add_term(shift, c);
        }
        Some(quot)
    }

    /// Horner evaluation at a real point.
    pub fn eval(&self, q: f64) -> f64 {
        let Some(top) = self.degree() else {
            return 0.0;
        };
        let mut acc = 0.0;
        for d in (0..=top).rev() {
            acc = acc * q + self.coeffs.get(&d).map_or(0.0, big_to_f64);
        }
        acc
    }

    pub fn has_nonnegative_coeffs(&self) -> bool {
        self.coeffs.values().all(|c| !c.is_negative())
    }
}

fn big_to_f64(c: &BigInt) -> f64 {
    c.to_f64().unwrap_or(f64::NAN)
}

impl Add for &IntPoly {
    type Output = IntPoly;

    fn add(self, rhs: &IntPoly) -> IntPoly {
        let mut out = self.clone();
        for (d, c) in rhs.terms() {
            out.add_term(d, c.clone());
        }
        out
    }
}

impl Mul for &IntPoly {
    type Output = IntPoly;

    fn mul(self, rhs: &IntPoly) -> IntPoly {
        let mut out = IntPoly::zero();
        for (da, ca) in self.terms() {
            for (db, cb) in rhs.terms() {
                out.add_term(da + db, ca * cb);
            }
        }
        out
    }
}

/// Polynomial in `(q, x)` with integer coefficients, keyed by
/// `(q-degree, x-degree)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BivarPoly {
    coeffs: BTreeMap<(u32, u32), BigInt>,
}

impl BivarPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        let mut p = Self::zero();
        p.add_term(0, 0, BigInt::one());
        p
    }

    /// `c(q) * x^k` for an integer polynomial `c`.
    pub fn from_q_poly(c: &IntPoly, x_deg: u32) -> Self {
        let mut p = Self::zero();
        for (d, v) in c.terms() {
            p.add_term(d, x_deg, v.clone());
        }
        p
    }

    fn add_term(&mut self, qd: u32, xd: u32, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry((qd, xd)).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&(qd, xd));
        }
    }

    pub fn coeff(&self, q_deg: u32, x_deg: u32) -> BigInt {
        self.coeffs
            .get(&(q_deg, x_deg))
            .cloned()
            .unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &BigInt)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn x_degree(&self) -> Option<u32> {
        self.coeffs.keys().map(|&(_, xd)| xd).max()
    }

    /// Coefficient of `x^k` as a polynomial in `q`.
    pub fn x_coeff(&self, x_deg: u32) -> IntPoly {
        let mut p = IntPoly::zero();
        for (&(qd, xd), c) in &self.coeffs {
            if xd == x_deg {
                p.add_term(qd, c.clone());
            }
        }
        p
    }

    pub fn eval(&self, q: f64, x: f64) -> f64 {
        let top = self.x_degree().unwrap_or(0);
        let mut acc = 0.0;
        for k in (0..=top).rev() {
            acc = acc * x + self.x_coeff(k).eval(q);
        }
        acc
    }
}

impl Add for &BivarPoly {
    type Output = BivarPoly;

    fn add(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = self.clone();
        for ((qd, xd), c) in rhs.terms() {
            out.add_term(qd, xd, c.clone());
        }
        out
    }
}

impl Mul for &BivarPoly {
    type Output = BivarPoly;

    fn mul(self, rhs: &BivarPoly) -> BivarPoly {
        let mut out = BivarPoly::zero();
        for ((qa, xa), ca) in self.terms() {
            for ((qb, xb), cb) in rhs.terms() {
                out.add_term(qa + qb, xa + xb, ca * cb);
            }
        }
        out
    }
}

/// Row `n` of the q-Pascal triangle, `[n; 0]_q, ..., [n; n]_q`, built with
/// `[n; j] = [n-1; j-1] + q^j [n-1; j]`.
pub fn gaussian_binomial_row(n: u32) -> Result<Vec<IntPoly>> {
    check_cap(n)?;
    let mut row = vec![IntPoly::one()];
    for m in 1..=n {
        let mut next = Vec::with_capacity(m as usize + 1);
        next.push(IntPoly::one());
        for j in 1..m {
            let j_us = j as usize;
            next.push(&row[j_us - 1] + &row[j_us].shift(j));
        }
        next.push(IntPoly::one());
        row = next;
    }
    Ok(row)
}

/// `[n]_q! / ([j]_q! [n-j]_q!)` by exact polynomial division.
pub fn gaussian_binomial_by_division(n: u32, j: u32) -> Result<IntPoly> {
    check_cap(n)?;
    if j > n {
        return Err(QError::domain(format!("j = {j} exceeds n = {n}")));
    }
    let denom = &IntPoly::q_factorial(j) * &IntPoly::q_factorial(n - j);
    IntPoly::q_factorial(n)
        .div_exact(&denom)
        .ok_or_else(|| QError::domain(format!("[{n}]! not divisible by [{j}]![{}]!", n - j)))
}

/// Gaussian binomial coefficient `[n; j]_q` as an exact polynomial in `q`.
pub fn gaussian_binomial_poly(n: u32, j: u32) -> Result<IntPoly> {
    if j > n {
        return Err(QError::domain(format!("j = {j} exceeds n = {n}")));
    }
    let row = gaussian_binomial_row(n)?;
    let poly = row[j as usize].clone();
    debug_assert_eq!(
        Some(&poly),
        gaussian_binomial_by_division(n, j).ok().as_ref()
    );
    Ok(poly)
}

/// Expanded `(1 + x)_q^n = prod_{j<n} (1 + q^j x)`.
pub fn pochhammer_poly(n: u32) -> Result<BivarPoly> {
    check_cap(n)?;
    let mut acc = BivarPoly::one();
    for j in 0..n {
        let mut factor = BivarPoly::one();
        factor.add_term(j, 1, BigInt::one());
        acc = &acc * &factor;
    }
    Ok(acc)
}

/// Right-hand side of the q-Gauss binomial formula,
/// `sum_j [n; j]_q q^(j(j-1)/2) x^j`.
pub fn gauss_binomial_sum(n: u32) -> Result<BivarPoly> {
    let row = gaussian_binomial_row(n)?;
    let mut sum = BivarPoly::zero();
    for (j, coeff) in row.iter().enumerate() {
        let j = j as u32;
        let shifted = coeff.shift(j * j.saturating_sub(1) / 2);
        sum = &sum + &BivarPoly::from_q_poly(&shifted, j);
    }
    Ok(sum)
}

/// Checks `(1 + x)_q^n = sum_j [n; j]_q q^(j(j-1)/2) x^j` with exact
/// coefficient comparison.
pub fn gauss_identity_check(n: u32) -> Result<bool> {
    Ok(pochhammer_poly(n)? == gauss_binomial_sum(n)?)
}
