//! Signed margins for the q-Bernoulli inequality family.
//!
//! Every margin is sign-normalized so that `value >= 0` means the inequality
//! holds in its stated direction. `err` bounds the truncation and rounding
//! error of `value`; a point is a certified violation only when
//! `value < -err`.

mod qhat;
mod search;

use std::fmt;
use std::str::FromStr;

use crate::error::{QError, Result};
use crate::qcore::{q_integer, q_number, QParams, TruncationPolicy};
use crate::qprod::{one_plus_inf, one_plus_real, pochhammer_one_plus, TailBoundedValue};
use crate::qseries::{e_q, E_q};

pub use qhat::{
    qhat_estimate, qhat_scan, qhat_supremum, reverify_qhat, QhatEstimate, Reverification,
    QHAT_BISECTIONS, REVERIFY_POINTS,
};
pub use search::{counterexample_search, DomainBox, Witness};

const EPS: f64 = f64::EPSILON;

/// Signed slack of an inequality with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub err: f64,
}

impl Margin {
    pub fn certified_nonnegative(&self) -> bool {
        self.value >= -self.err
    }

    pub fn certified_violation(&self) -> bool {
        self.value < -self.err
    }

    fn checked(self, what: &str) -> Result<Self> {
        if self.value.is_finite() && self.err.is_finite() {
            Ok(self)
        } else {
            Err(QError::NonFinite(format!("{what} margin")))
        }
    }
}

/// A value with an absolute error bound; arithmetic adds one rounding per op.
#[derive(Debug, Clone, Copy)]
struct Est {
    v: f64,
    e: f64,
}

impl Est {
    fn with_rel(v: f64, rel: f64) -> Self {
        Self {
            v,
            e: v.abs() * rel,
        }
    }

    fn from_tail(t: &TailBoundedValue) -> Self {
        Self {
            v: t.value,
            e: t.abs_err(),
        }
    }

    fn mul(self, o: Est) -> Est {
        let v = self.v * o.v;
        Est {
            v,
            e: self.v.abs() * o.e + o.v.abs() * self.e + self.e * o.e + EPS * v.abs(),
        }
    }

    fn sub(self, o: Est) -> Est {
        let v = self.v - o.v;
        Est {
            v,
            e: self.e + o.e + EPS * v.abs(),
        }
    }
}

/// `1 + [alpha]_q x` with its rounding bound.
fn one_plus_qnum(alpha: f64, x: f64, p: &QParams) -> Est {
    let t = q_number(alpha, p) * x;
    let v = 1.0 + t;
    Est {
        v,
        e: 4.0 * EPS * (t.abs() + v.abs()),
    }
}

fn q_pow(alpha: f64, p: &QParams) -> f64 {
    (alpha * p.q().ln()).exp()
}

fn normalize(raw: Est, alpha: f64) -> Margin {
    // alpha = 1 belongs to the ">=" regime
    let value = if alpha >= 1.0 { raw.v } else { -raw.v };
    Margin { value, err: raw.e }
}

fn check_x(x: f64) -> Result<()> {
    if x > -1.0 && x.is_finite() {
        Ok(())
    } else {
        Err(QError::domain(format!("need x > -1, got {x}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(QError::domain(format!("need alpha > 0, got {alpha}")))
    }
}

/// `(1 + x)_q^n - (1 + [n]_q x)` for integer `n >= 1` and `x > -1`.
pub fn margin_thm1(x: f64, n: u32, p: &QParams) -> Result<Margin> {
    check_x(x)?;
    if n == 0 {
        return Err(QError::domain("need n >= 1"));
    }
    let lhs = pochhammer_one_plus(x, n as i64, p)?;
    let t = q_integer(n, p) * x;
    let rhs = 1.0 + t;
    let err = 4.0 * EPS * (n as f64 + 2.0) * (lhs.abs() + rhs.abs() + t.abs());
    Margin {
        value: lhs - rhs,
        err,
    }
    .checked("thm1")
}

/// `(1 - y)_q^n - (1 - [n]_q y)` for `0 < y < 1`.
pub fn margin_rem2(y: f64, n: u32, p: &QParams) -> Result<Margin> {
    if !(y > 0.0 && y < 1.0) {
        return Err(QError::domain(format!("need 0 < y < 1, got {y}")));
    }
    margin_thm1(-y, n, p)
}

/// `(1 + x)_q^{m+n} - (1 + [m]_q x)(1 + q^m x)_q^n` for `m >= 1`, integer `n`.
pub fn margin_cor1(x: f64, m: u32, n: i64, p: &QParams) -> Result<Margin> {
    check_x(x)?;
    if m == 0 {
        return Err(QError::domain("need m >= 1"));
    }
    let lhs = pochhammer_one_plus(x, m as i64 + n, p)?;
    let factor = if n == 0 {
        1.0
    } else {
        pochhammer_one_plus(p.q().powi(m as i32) * x, n, p)?
    };
    let t = q_integer(m, p) * x;
    let rhs = (1.0 + t) * factor;
    let ops = (m as i64 + n).unsigned_abs() as f64 + n.unsigned_abs() as f64 + m as f64 + 4.0;
    let err = 4.0 * EPS * ops * (lhs.abs() + rhs.abs() + (t * factor).abs());
    Margin {
        value: lhs - rhs,
        err,
    }
    .checked("cor1")
}

/// Whether every factor of `(1 + q^m x)_q^n` is positive, in which case the
/// generalized integer inequality inherits its sign from the integer one.
pub fn cor1_factor_positive(x: f64, m: u32, n: i64, p: &QParams) -> bool {
    if n >= 0 || x >= 0.0 {
        return true;
    }
    // factors 1 + q^{m-i} x, i = 1..|n|; the most negative has exponent m - |n|
    let exponent = m as i64 - n.unsigned_abs() as i64;
    1.0 + p.q().powi(exponent as i32) * x > 0.0
}

/// Raw difference `(1 + x)_q^alpha - (1 + [alpha]_q x)` without sign
/// normalization.
pub fn bernoulli_raw_difference(
    x: f64,
    alpha: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<Margin> {
    check_x(x)?;
    let lhs = Est::from_tail(&one_plus_real(x, alpha, p, policy)?);
    let raw = lhs.sub(one_plus_qnum(alpha, x, p));
    Margin {
        value: raw.v,
        err: raw.e,
    }
    .checked("raw")
}

/// Real-order inequality: `(1 + x)_q^alpha >= 1 + [alpha]_q x` for
/// `alpha >= 1`, reversed for `0 < alpha < 1`.
///
/// Guaranteed for `x >= 0`; evaluation is defined for every `x > -1`.
pub fn margin_thm2(x: f64, alpha: f64, p: &QParams, policy: &TruncationPolicy) -> Result<Margin> {
    check_alpha(alpha)?;
    let raw = bernoulli_raw_difference(x, alpha, p, policy)?;
    Ok(normalize(
        Est {
            v: raw.value,
            e: raw.err,
        },
        alpha,
    ))
}

/// `(1 + x)_q^{alpha+beta}` against `(1 + [alpha]_q x)(1 + q^alpha x)_q^beta`.
pub fn margin_prop1(
    x: f64,
    alpha: f64,
    beta: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<Margin> {
    check_x(x)?;
    check_alpha(alpha)?;
    let lhs = Est::from_tail(&one_plus_real(x, alpha + beta, p, policy)?);
    let factor = Est::from_tail(&one_plus_real(q_pow(alpha, p) * x, beta, p, policy)?);
    let raw = lhs.sub(one_plus_qnum(alpha, x, p).mul(factor));
    normalize(raw, alpha).checked("prop1")
}

fn cor6_rhs(x: f64, alpha: f64, beta: f64, p: &QParams, policy: &TruncationPolicy) -> Result<Est> {
    let factor = Est::from_tail(&one_plus_real(q_pow(alpha, p) * x, beta, p, policy)?);
    let tail = Est::from_tail(&one_plus_inf(q_pow(alpha + beta, p) * x, p, policy)?);
    Ok(one_plus_qnum(alpha, x, p).mul(factor).mul(tail))
}

/// `(1 + x)_q^inf` against
/// `(1 + [alpha]_q x)(1 + q^alpha x)_q^beta (1 + q^{alpha+beta} x)_q^inf`.
pub fn margin_cor6(
    x: f64,
    alpha: f64,
    beta: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<Margin> {
    check_x(x)?;
    check_alpha(alpha)?;
    let lhs = Est::from_tail(&one_plus_inf(x, p, policy)?);
    let raw = lhs.sub(cor6_rhs(x, alpha, beta, p, policy)?);
    normalize(raw, alpha).checked("cor6")
}

/// `(1 + x)_q^inf` against `(1 + [alpha]_q x)(1 + q^alpha x)_q^inf`.
pub fn margin_cor_final(
    x: f64,
    alpha: f64,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<Margin> {
    check_x(x)?;
    check_alpha(alpha)?;
    let lhs = Est::from_tail(&one_plus_inf(x, p, policy)?);
    let tail = Est::from_tail(&one_plus_inf(q_pow(alpha, p) * x, p, policy)?);
    let raw = lhs.sub(one_plus_qnum(alpha, x, p).mul(tail));
    normalize(raw, alpha).checked("cor_final")
}

/// Which q-exponential carries the left-hand side of [`margin_exp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpKind {
    /// `E_q^x = (1 + (1-q) x)_q^inf`
    Big,
    /// `1 / e_q^x = (1 - (1-q) x)_q^inf`
    Small,
}

/// The generalized product inequality after substituting `z = (1-q) x`
/// (`Big`) or `z = -(1-q) x` (`Small`), with `(1 + z)_q^inf` evaluated
/// through the exponential series.
///
/// Domains: `x > -1/(1-q)` for `Big`, `|x| < 1/(1-q)` for `Small`.
pub fn margin_exp(
    x: f64,
    alpha: f64,
    beta: f64,
    which: ExpKind,
    p: &QParams,
    policy: &TruncationPolicy,
) -> Result<Margin> {
    check_alpha(alpha)?;
    let radius = 1.0 / (1.0 - p.q());
    let (z, lhs) = match which {
        ExpKind::Big => {
            if !(x > -radius) {
                return Err(QError::domain(format!(
                    "need x > -1/(1-q) = {}, got {x}",
                    -radius
                )));
            }
            let s = E_q(x, p, policy)?;
            ((1.0 - p.q()) * x, Est::with_rel(s.value, s.rel_err))
        }
        ExpKind::Small => {
            if !(x.abs() < radius) {
                return Err(QError::domain(format!(
                    "need |x| < 1/(1-q) = {radius}, got {x}"
                )));
            }
            let s = e_q(x, p, policy)?;
            let v = 1.0 / s.value;
            (-(1.0 - p.q()) * x, Est::with_rel(v, s.rel_err + EPS))
        }
    };
    let raw = lhs.sub(cor6_rhs(z, alpha, beta, p, policy)?);
    normalize(raw, alpha).checked("exp")
}

/// Short identifiers for the inequality forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormTag {
    Thm1,
    Rem2,
    Cor1,
    Thm2,
    Prop1,
    Cor6,
    CorFinal,
    ExpBig,
    ExpSmall,
}

impl FormTag {
    pub const ALL: [FormTag; 9] = [
        FormTag::Thm1,
        FormTag::Rem2,
        FormTag::Cor1,
        FormTag::Thm2,
        FormTag::Prop1,
        FormTag::Cor6,
        FormTag::CorFinal,
        FormTag::ExpBig,
        FormTag::ExpSmall,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FormTag::Thm1 => "thm1",
            FormTag::Rem2 => "rem2",
            FormTag::Cor1 => "cor1",
            FormTag::Thm2 => "thm2",
            FormTag::Prop1 => "prop1",
            FormTag::Cor6 => "cor6",
            FormTag::CorFinal => "cor_final",
            FormTag::ExpBig => "exp_E",
            FormTag::ExpSmall => "exp_e",
        }
    }

    /// True for forms with a real exponent `alpha`.
    pub fn has_alpha(&self) -> bool {
        !matches!(self, FormTag::Thm1 | FormTag::Rem2 | FormTag::Cor1)
    }

    pub fn has_beta(&self) -> bool {
        matches!(
            self,
            FormTag::Prop1 | FormTag::Cor6 | FormTag::ExpBig | FormTag::ExpSmall
        )
    }
}

impl fmt::Display for FormTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        FormTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = FormTag::ALL.iter().map(|t| t.as_str()).collect();
                format!("unknown form '{s}' (expected one of {})", names.join(", "))
            })
    }
}

/// One inequality with its fixed parameters; the free variables are the base
/// `q` and the point `x` (`y` for [`IneqForm::Rem2`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IneqForm {
    Thm1 {
        n: u32,
    },
    Rem2 {
        n: u32,
    },
    Cor1 {
        m: u32,
        n: i64,
    },
    Thm2 {
        alpha: f64,
    },
    Prop1 {
        alpha: f64,
        beta: f64,
    },
    Cor6 {
        alpha: f64,
        beta: f64,
    },
    CorFinal {
        alpha: f64,
    },
    Exp {
        which: ExpKind,
        alpha: f64,
        beta: f64,
    },
}

impl IneqForm {
    pub fn tag(&self) -> FormTag {
        match self {
            IneqForm::Thm1 { .. } => FormTag::Thm1,
            IneqForm::Rem2 { .. } => FormTag::Rem2,
            IneqForm::Cor1 { .. } => FormTag::Cor1,
            IneqForm::Thm2 { .. } => FormTag::Thm2,
            IneqForm::Prop1 { .. } => FormTag::Prop1,
            IneqForm::Cor6 { .. } => FormTag::Cor6,
            IneqForm::CorFinal { .. } => FormTag::CorFinal,
            IneqForm::Exp {
                which: ExpKind::Big,
                ..
            } => FormTag::ExpBig,
            IneqForm::Exp {
                which: ExpKind::Small,
                ..
            } => FormTag::ExpSmall,
        }
    }

    /// Builds a form from a tag and optional parameters, rejecting missing or
    /// out-of-range ones.
    pub fn from_parts(
        tag: FormTag,
        n: Option<i64>,
        m: Option<i64>,
        alpha: Option<f64>,
        beta: Option<f64>,
    ) -> Result<Self> {
        let need_n = || n.ok_or_else(|| QError::domain(format!("{tag} needs n")));
        let need_alpha = || alpha.ok_or_else(|| QError::domain(format!("{tag} needs alpha")));
        let pos_u32 = |v: i64, name: &str| -> Result<u32> {
            if v >= 1 {
                u32::try_from(v).map_err(|_| QError::domain(format!("{name} = {v} too large")))
            } else {
                Err(QError::domain(format!("{tag} needs {name} >= 1, got {v}")))
            }
        };
        let beta = beta.unwrap_or(0.0);
        let form = match tag {
            FormTag::Thm1 => IneqForm::Thm1 {
                n: pos_u32(need_n()?, "n")?,
            },
            FormTag::Rem2 => IneqForm::Rem2 {
                n: pos_u32(need_n()?, "n")?,
            },
            FormTag::Cor1 => IneqForm::Cor1 {
                m: pos_u32(m.ok_or_else(|| QError::domain("cor1 needs m"))?, "m")?,
                n: need_n()?,
            },
            FormTag::Thm2 => IneqForm::Thm2 {
                alpha: need_alpha()?,
            },
            FormTag::Prop1 => IneqForm::Prop1 {
                alpha: need_alpha()?,
                beta,
            },
            FormTag::Cor6 => IneqForm::Cor6 {
                alpha: need_alpha()?,
                beta,
            },
            FormTag::CorFinal => IneqForm::CorFinal {
                alpha: need_alpha()?,
            },
            FormTag::ExpBig => IneqForm::Exp {
                which: ExpKind::Big,
                alpha: need_alpha()?,
                beta,
            },
            FormTag::ExpSmall => IneqForm::Exp {
                which: ExpKind::Small,
                alpha: need_alpha()?,
                beta,
            },
        };
        if let Some(a) = form.alpha() {
            check_alpha(a)?;
        }
        if let Some(b) = form.beta() {
            if !b.is_finite() {
                return Err(QError::domain("beta must be finite"));
            }
        }
        Ok(form)
    }

    pub fn n(&self) -> Option<i64> {
        match *self {
            IneqForm::Thm1 { n } | IneqForm::Rem2 { n } => Some(n as i64),
            IneqForm::Cor1 { n, .. } => Some(n),
            _ => None,
        }
    }

    pub fn m(&self) -> Option<i64> {
        match *self {
            IneqForm::Cor1 { m, .. } => Some(m as i64),
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            IneqForm::Thm2 { alpha }
            | IneqForm::CorFinal { alpha }
            | IneqForm::Prop1 { alpha, .. }
            | IneqForm::Cor6 { alpha, .. }
            | IneqForm::Exp { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            IneqForm::Prop1 { beta, .. }
            | IneqForm::Cor6 { beta, .. }
            | IneqForm::Exp { beta, .. } => Some(beta),
            _ => None,
        }
    }

    /// Same form with `alpha` replaced; forms without `alpha` are unchanged.
    pub fn with_alpha(self, a: f64) -> Self {
        match self {
            IneqForm::Thm2 { .. } => IneqForm::Thm2 { alpha: a },
            IneqForm::CorFinal { .. } => IneqForm::CorFinal { alpha: a },
            IneqForm::Prop1 { beta, .. } => IneqForm::Prop1 { alpha: a, beta },
            IneqForm::Cor6 { beta, .. } => IneqForm::Cor6 { alpha: a, beta },
            IneqForm::Exp { which, beta, .. } => IneqForm::Exp {
                which,
                alpha: a,
                beta,
            },
            other => other,
        }
    }

    /// Same form with `beta` replaced; forms without `beta` are unchanged.
    pub fn with_beta(self, b: f64) -> Self {
        match self {
            IneqForm::Prop1 { alpha, .. } => IneqForm::Prop1 { alpha, beta: b },
            IneqForm::Cor6 { alpha, .. } => IneqForm::Cor6 { alpha, beta: b },
            IneqForm::Exp { which, alpha, .. } => IneqForm::Exp {
                which,
                alpha,
                beta: b,
            },
            other => other,
        }
    }

    /// Sign-normalized margin at `(q, x)`.
    pub fn margin(&self, x: f64, p: &QParams, policy: &TruncationPolicy) -> Result<Margin> {
        match *self {
            IneqForm::Thm1 { n } => margin_thm1(x, n, p),
            IneqForm::Rem2 { n } => margin_rem2(x, n, p),
            IneqForm::Cor1 { m, n } => margin_cor1(x, m, n, p),
            IneqForm::Thm2 { alpha } => margin_thm2(x, alpha, p, policy),
            IneqForm::Prop1 { alpha, beta } => margin_prop1(x, alpha, beta, p, policy),
            IneqForm::Cor6 { alpha, beta } => margin_cor6(x, alpha, beta, p, policy),
            IneqForm::CorFinal { alpha } => margin_cor_final(x, alpha, p, policy),
            IneqForm::Exp { which, alpha, beta } => margin_exp(x, alpha, beta, which, p, policy),
        }
    }

    /// Whether the inequality is claimed for every `q` in `(0, 1)` at this
    /// point. Outside this region it is only claimed for `q` above a
    /// threshold.
    pub fn guaranteed(&self, x: f64, p: &QParams) -> bool {
        match *self {
            IneqForm::Thm1 { .. } | IneqForm::Rem2 { .. } => true,
            IneqForm::Cor1 { m, n } => cor1_factor_positive(x, m, n, p),
            IneqForm::Thm2 { .. }
            | IneqForm::Prop1 { .. }
            | IneqForm::Cor6 { .. }
            | IneqForm::CorFinal { .. }
            | IneqForm::Exp {
                which: ExpKind::Big,
                ..
            } => x >= 0.0,
            IneqForm::Exp {
                which: ExpKind::Small,
                ..
            } => x <= 0.0,
        }
    }
}

impl fmt::Display for IneqForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())?;
        if let Some(m) = self.m() {
            write!(f, " m={m}")?;
        }
        if let Some(n) = self.n() {
            write!(f, " n={n}")?;
        }
        if let Some(a) = self.alpha() {
            write!(f, " alpha={a}")?;
        }
        if let Some(b) = self.beta() {
            write!(f, " beta={b}")?;
        }
        Ok(())
    }
}
