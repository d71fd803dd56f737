//! Evaluation of q-special functions with controlled truncation error and
//! verification of the q-Bernoulli inequality family.
//!
//! Modules, bottom-up:
//! - [`qcore`]: q-numbers, q-factorials, q-binomial coefficients
//! - [`qexact`]: exact integer polynomials in `(q, x)` for finite identities
//! - [`qprod`]: finite, negative-order, infinite and real-order q-Pochhammer products
//! - [`qseries`]: Euler expansions and the q-exponentials `e_q`, `E_q`
//! - [`qdiff`]: the Jackson q-derivative and a q-mean-value solver
//! - [`ineq`]: signed margins, counterexample search and threshold estimation
//! - [`cli`]: report writers and the command-line front end

// `!(a < b)` is used on purpose so that NaN inputs fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod ineq;
pub mod qcore;
pub mod qdiff;
pub mod qexact;
pub mod qprod;
pub mod qseries;

pub use error::{QError, Result};
pub use qcore::{QParams, TruncationPolicy};
