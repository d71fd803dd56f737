//! Threshold estimation: the smallest base above which a fixed inequality
//! slice holds, found by a descending grid scan plus bisection.

use rayon::prelude::*;

use super::{IneqForm, Margin};
use crate::error::{QError, Result};
use crate::qcore::{QParams, TruncationPolicy, Q_MAX, Q_MIN};

/// Bisection steps spent refining a sign change.
pub const QHAT_BISECTIONS: u32 = 40;
/// Points used by [`reverify_qhat`].
pub const REVERIFY_POINTS: usize = 100;
/// Budget multiplier for re-verification, which samples bases closer to 1.
const REVERIFY_BUDGET_FACTOR: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct QhatEstimate {
    pub qhat: f64,
    pub grid_step: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    /// Highest base seen with a certified violation, with its margin.
    pub witness_below: Option<(f64, Margin)>,
    pub held_on_all_grid: bool,
    pub refinement_steps: u32,
    /// Grid or bisection bases where the margin could not be evaluated.
    pub inconclusive: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Holds,
    Violated,
    Inconclusive,
}

fn classify(m: &Result<Margin>) -> Status {
    match m {
        Ok(m) if m.certified_violation() => Status::Violated,
        Ok(_) => Status::Holds,
        Err(_) => Status::Inconclusive,
    }
}

/// Descending grid `q_hi, q_hi - step, ...`, ending exactly at `q_lo`.
fn descending_grid(step: f64, q_lo: f64, q_hi: f64) -> Vec<f64> {
    let count = ((q_hi - q_lo) / step).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| q_hi - k as f64 * step).collect();
    if let Some(&last) = grid.last() {
        if last - q_lo > step * 1e-9 {
            grid.push(q_lo);
        } else {
            *grid.last_mut().unwrap() = q_lo;
        }
    }
    grid
}

/// Scans `margin_at(q)` from `q_hi` down to `q_lo`.
///
/// The first certified violation met on the way down brackets the threshold
/// together with the nearest holding grid point above it. The bracket is
/// bisected; bisection points whose margin is within its error of zero or
/// could not be evaluated are treated like violations, which can only move
/// the estimate upward. The estimate is the holding end of the final bracket.
/// Grid evaluation runs in parallel but the walk is in grid order, so the
/// result does not depend on scheduling.
pub fn qhat_scan<F>(margin_at: F, step: f64, q_lo: f64, q_hi: f64) -> QhatEstimate
where
    F: Fn(f64) -> Result<Margin> + Sync,
{
    let grid = descending_grid(step, q_lo, q_hi);
    let margins: Vec<Result<Margin>> = grid.par_iter().map(|&q| margin_at(q)).collect();

    let mut inconclusive: Vec<f64> = grid
        .iter()
        .zip(&margins)
        .filter(|(_, m)| classify(m) == Status::Inconclusive)
        .map(|(&q, _)| q)
        .collect();

    let first_violation = margins.iter().position(|m| classify(m) == Status::Violated);
    let Some(k) = first_violation else {
        return QhatEstimate {
            qhat: q_lo,
            grid_step: step,
            q_lo,
            q_hi,
            witness_below: None,
            held_on_all_grid: true,
            refinement_steps: 0,
            inconclusive,
        };
    };

    let mut witness = (grid[k], *margins[k].as_ref().unwrap());
    let upper = (0..k)
        .rev()
        .find(|&i| classify(&margins[i]) == Status::Holds);
    let Some(upper) = upper else {
        // nothing holds above the violation: no validity interval is claimed
        return QhatEstimate {
            qhat: q_hi,
            grid_step: step,
            q_lo,
            q_hi,
            witness_below: Some(witness),
            held_on_all_grid: false,
            refinement_steps: 0,
            inconclusive,
        };
    };

    let (mut lo, mut hi) = (grid[k], grid[upper]);
    for _ in 0..QHAT_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let m = margin_at(mid);
        match &m {
            Ok(v) if v.certified_violation() => {
                witness = (mid, *v);
                lo = mid;
            }
            Ok(v) if v.value > v.err => hi = mid,
            Ok(_) => lo = mid,
            Err(_) => {
                inconclusive.push(mid);
                lo = mid;
            }
        }
    }

    QhatEstimate {
        qhat: hi,
        grid_step: step,
        q_lo,
        q_hi,
        witness_below: Some(witness),
        held_on_all_grid: false,
        refinement_steps: QHAT_BISECTIONS,
        inconclusive,
    }
}

/// Threshold estimate for one `(form, x)` slice over `[q_lo, q_hi]`.
pub fn qhat_estimate(
    form: &IneqForm,
    x: f64,
    grid_step: f64,
    (q_lo, q_hi): (f64, f64),
    policy: &TruncationPolicy,
) -> Result<QhatEstimate> {
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(QError::domain(format!(
            "grid step must lie in (0, 0.01], got {grid_step}"
        )));
    }
    QParams::new(q_lo)?;
    QParams::new(q_hi)?;
    if q_lo >= q_hi {
        return Err(QError::domain(format!(
            "need q_lo < q_hi, got [{q_lo}, {q_hi}]"
        )));
    }
    // a slice outside the form's x-domain fails at every base
    form.margin(x, &QParams::new(q_hi)?, policy)
        .map(|_| ())
        .or_else(|e| match e {
            QError::Domain(_) | QError::SingularPoint { .. } => Err(e),
            _ => Ok(()),
        })?;
    Ok(qhat_scan(
        |q| form.margin(x, &QParams::new(q)?, policy),
        grid_step,
        q_lo,
        q_hi,
    ))
}

/// Outcome of re-checking an estimate above `qhat + grid_step`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reverification {
    pub checked: usize,
    pub violations: Vec<(f64, Margin)>,
    pub inconclusive: Vec<f64>,
    /// Smallest certified slack `value + err` among evaluated points.
    pub min_slack: Option<f64>,
}

impl Reverification {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates the margin at [`REVERIFY_POINTS`] evenly spaced bases strictly
/// inside `(qhat + grid_step, q_max)`, using an enlarged term budget since
/// the products converge slowly near 1.
pub fn reverify_qhat(
    form: &IneqForm,
    x: f64,
    est: &QhatEstimate,
    q_max: f64,
    policy: &TruncationPolicy,
) -> Result<Reverification> {
    let big = policy.with_max_terms(policy.max_terms().saturating_mul(REVERIFY_BUDGET_FACTOR))?;
    let a = est.qhat + est.grid_step;
    let b = q_max.min(Q_MAX);
    if a >= b {
        return Ok(Reverification::default());
    }
    let h = (b - a) / (REVERIFY_POINTS + 1) as f64;
    let qs: Vec<f64> = (1..=REVERIFY_POINTS).map(|i| a + i as f64 * h).collect();
    let margins: Vec<Result<Margin>> = qs
        .par_iter()
        .map(|&q| form.margin(x, &QParams::with_range(q, Q_MIN, Q_MAX)?, &big))
        .collect();
    let mut out = Reverification {
        checked: qs.len(),
        ..Default::default()
    };
    for (q, m) in qs.into_iter().zip(margins) {
        match m {
            Ok(m) => {
                let slack = m.value + m.err;
                out.min_slack = Some(out.min_slack.map_or(slack, |s| s.min(slack)));
                if m.certified_violation() {
                    out.violations.push((q, m));
                }
            }
            Err(_) => out.inconclusive.push(q),
        }
    }
    Ok(out)
}

/// Largest per-slice estimate. This is an empirical bound over the sampled
/// slices only; it says nothing about points between them.
pub fn qhat_supremum(estimates: &[QhatEstimate]) -> Option<f64> {
    estimates.iter().map(|e| e.qhat).reduce(f64::max)
}
