//! Independent oracles for the integration tests.
//!
//! Products are evaluated in binary fixed point with `SCALE` fractional bits
//! on big integers, from the exact binary values of the `f64` inputs. That
//! shares no code with the library's log-domain evaluation.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub const SCALE: u32 = 1024;

/// Exact `v * 2^SCALE`, truncated toward zero below `2^-SCALE`.
pub fn to_fixed(v: f64) -> BigInt {
    assert!(v.is_finite());
    if v == 0.0 {
        return BigInt::zero();
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let shift = e + SCALE as i64;
    let m = BigInt::from(mant) * sign;
    if shift >= 0 {
        m << shift as usize
    } else {
        m / (BigInt::one() << (-shift) as usize)
    }
}

pub fn to_f64(v: &BigInt) -> f64 {
    // keep 64 significant bits before converting
    let bits = v.bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (v >> drop as usize).to_f64().unwrap();
    top * 2f64.powi((drop - SCALE as i64) as i32)
}

fn one() -> BigInt {
    BigInt::one() << SCALE as usize
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> SCALE as usize
}

fn div(a: &BigInt, b: &BigInt) -> BigInt {
    (a << SCALE as usize) / b
}

/// `prod_{j>=0} (1 + q^j x)` until `|q^j x| < 2^-220`.
fn inf_product_fixed(x: f64, q: f64) -> BigInt {
    let qf = to_fixed(q);
    let mut t = to_fixed(x);
    let mut acc = one();
    let floor = BigInt::one() << (SCALE - 220) as usize;
    while t.abs() >= floor {
        acc = mul(&acc, &(one() + &t));
        t = mul(&t, &qf);
    }
    acc
}

/// `(1 + x)_q^inf`.
pub fn one_plus_inf(x: f64, q: f64) -> f64 {
    to_f64(&inf_product_fixed(x, q))
}

/// `(1 + x)_q^inf / (1 + s x)_q^inf` with `s = q^alpha` supplied by the caller.
pub fn one_plus_real_with_shift(x: f64, shifted: f64, q: f64) -> f64 {
    to_f64(&div(
        &inf_product_fixed(x, q),
        &inf_product_fixed(shifted, q),
    ))
}

/// `(1 + x)_q^alpha` with `q^alpha` taken from `f64::powf`.
pub fn one_plus_real(x: f64, alpha: f64, q: f64) -> f64 {
    one_plus_real_with_shift(x, q.powf(alpha) * x, q)
}

/// `prod_{j<n} (x - q^j a)`.
pub fn pochhammer_fin(x: f64, a: f64, n: u32, q: f64) -> f64 {
    let qf = to_fixed(q);
    let xf = to_fixed(x);
    let mut qa = to_fixed(a);
    let mut acc = one();
    for _ in 0..n {
        acc = mul(&acc, &(&xf - &qa));
        qa = mul(&qa, &qf);
    }
    to_f64(&acc)
}

/// `1 / prod_{j=1}^{n} (x - q^{-j} a)`.
pub fn pochhammer_neg(x: f64, a: f64, n: u32, q: f64) -> f64 {
    let inv_q = div(&one(), &to_fixed(q));
    let xf = to_fixed(x);
    let mut qa = mul(&to_fixed(a), &inv_q);
    let mut acc = one();
    for _ in 0..n {
        acc = mul(&acc, &(&xf - &qa));
        qa = mul(&qa, &inv_q);
    }
    to_f64(&div(&one(), &acc))
}

/// Coefficients of `[n; j]_q` by enumerating `j`-subsets `S` of
/// `{1, ..., n}`: the coefficient of `q^k` counts subsets with
/// `sum(S) - j(j+1)/2 = k`.
pub fn gaussian_binomial_by_subsets(n: u32, j: u32) -> Vec<u64> {
    if j > n {
        return vec![];
    }
    let deg = (j * (n - j)) as usize;
    let mut coeffs = vec![0u64; deg + 1];
    let base = (j * (j + 1) / 2) as usize;
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() != j {
            continue;
        }
        let s: usize = (0..n)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| b as usize + 1)
            .sum();
        coeffs[s - base] += 1;
    }
    coeffs
}

/// Relative distance `|a - b| / |b|`.
pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}
