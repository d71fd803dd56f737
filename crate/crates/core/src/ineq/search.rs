//! Seeded quasi-random counterexample search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{IneqForm, Margin};
use crate::qcore::{QParams, TruncationPolicy};

const CHUNK: usize = 2048;

/// Sampling box. `alpha` and `beta` override the form's own parameters when
/// given; otherwise those stay fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    pub q: (f64, f64),
    pub x: (f64, f64),
    pub alpha: Option<(f64, f64)>,
    pub beta: Option<(f64, f64)>,
}

impl DomainBox {
    pub fn new(q: (f64, f64), x: (f64, f64)) -> Self {
        Self {
            q,
            x,
            alpha: None,
            beta: None,
        }
    }

    pub fn with_alpha(mut self, lo: f64, hi: f64) -> Self {
        self.alpha = Some((lo, hi));
        self
    }

    pub fn with_beta(mut self, lo: f64, hi: f64) -> Self {
        self.beta = Some((lo, hi));
        self
    }

    fn dims(&self) -> usize {
        2 + self.alpha.is_some() as usize + self.beta.is_some() as usize
    }
}

/// A certified violation: `margin.value < -margin.err`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub form: IneqForm,
    pub q: f64,
    pub x: f64,
    pub margin: Margin,
}

/// Additive-recurrence generators of the R_d low-discrepancy sequence.
fn rd_generators(d: usize) -> Vec<f64> {
    // phi_d is the positive root of t^(d+1) = t + 1
    let mut phi = 2.0_f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    (1..=d).map(|i| phi.powi(-(i as i32)).fract()).collect()
}

fn lerp((lo, hi): (f64, f64), u: f64) -> f64 {
    lo + u * (hi - lo)
}

/// Samples `budget` points of a randomly shifted R_d sequence over the box
/// and returns the first certified violation in sequence order. Points where
/// the margin is undefined or cannot be evaluated are skipped.
pub fn counterexample_search(
    form: &IneqForm,
    domain: &DomainBox,
    budget: usize,
    seed: u64,
    policy: &TruncationPolicy,
) -> Option<Witness> {
    let d = domain.dims();
    let gens = rd_generators(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();

    let sample = |k: usize| -> Option<Witness> {
        let u: Vec<f64> = (0..d)
            .map(|i| (shift[i] + (k as f64 + 1.0) * gens[i]).fract())
            .collect();
        let q = lerp(domain.q, u[0]);
        let x = lerp(domain.x, u[1]);
        let mut f = *form;
        let mut next = 2;
        if let Some(r) = domain.alpha {
            f = f.with_alpha(lerp(r, u[next]));
            next += 1;
        }
        if let Some(r) = domain.beta {
            f = f.with_beta(lerp(r, u[next]));
        }
        let p = QParams::new(q).ok()?;
        let margin = f.margin(x, &p, policy).ok()?;
        margin.certified_violation().then_some(Witness {
            form: f,
            q,
            x,
            margin,
        })
    };

    (0..budget).step_by(CHUNK).find_map(|start| {
        let end = (start + CHUNK).min(budget);
        (start..end).into_par_iter().find_map_first(sample)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_lie_in_unit_interval() {
        for d in 1..5 {
            let g = rd_generators(d);
            assert_eq!(g.len(), d);
            assert!(g.iter().all(|&v| v > 0.0 && v < 1.0));
        }
        // golden ratio for d = 1
        assert!((rd_generators(1)[0] - 0.618_033_988_749_895).abs() < 1e-12);
    }

    #[test]
    fn guaranteed_forms_have_no_witness() {
        let pol = TruncationPolicy::default();
        let b = DomainBox::new((0.01, 0.99), (-1.0, 10.0));
        assert!(counterexample_search(&IneqForm::Thm1 { n: 4 }, &b, 2000, 1, &pol).is_none());
        let b = DomainBox::new((0.05, 0.95), (0.0, 5.0)).with_alpha(0.1, 4.0);
        assert!(counterexample_search(&IneqForm::Thm2 { alpha: 2.0 }, &b, 500, 2, &pol).is_none());
    }

    #[test]
    fn finds_negative_order_witness_deterministically() {
        let pol = TruncationPolicy::default();
        let form = IneqForm::Cor1 { m: 2, n: -3 };
        let b = DomainBox::new((0.05, 0.85), (-0.99, -0.9));
        let w = counterexample_search(&form, &b, 1000, 7, &pol).unwrap();
        assert!(w.margin.value < -w.margin.err);
        let again = counterexample_search(&form, &b, 1000, 7, &pol).unwrap();
        assert_eq!(w, again);
    }
}
