mod common;

use qbernoulli::qexact::{
    gauss_identity_check, gaussian_binomial_by_division, gaussian_binomial_poly,
    gaussian_binomial_row, EXACT_CAP,
};
use qbernoulli::QError;

fn coeffs(n: u32, j: u32) -> Vec<u64> {
    let p = gaussian_binomial_poly(n, j).unwrap();
    let deg = p.degree().map_or(0, |d| d + 1);
    (0..deg)
        .map(|k| u64::try_from(p.coeff(k)).unwrap())
        .collect()
}

#[test]
fn binomial_coefficients_count_subsets() {
    for n in 0..=16 {
        for j in 0..=n {
            assert_eq!(
                coeffs(n, j),
                common::gaussian_binomial_by_subsets(n, j),
                "n={n} j={j}"
            );
        }
    }
}

#[test]
fn pascal_and_division_agree() {
    for n in 0..=30 {
        let row = gaussian_binomial_row(n).unwrap();
        assert_eq!(row.len(), n as usize + 1);
        for (j, p) in row.iter().enumerate() {
            assert_eq!(p, &gaussian_binomial_by_division(n, j as u32).unwrap());
            assert!(p.has_nonnegative_coeffs());
        }
    }
}

#[test]
fn gauss_identity_small_range() {
    for n in 0..=12 {
        assert!(gauss_identity_check(n).unwrap(), "n={n}");
    }
}

#[test]
fn cap_is_enforced() {
    assert!(matches!(
        gauss_identity_check(EXACT_CAP + 1),
        Err(QError::CapExceeded { .. })
    ));
}
