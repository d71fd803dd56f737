//! Inequality grids shared by `verify inequalities` and `sweep`.

use std::io::{self, Write};

use rayon::prelude::*;

use super::report::{CheckKind, CheckRecord, Params, ReportWriter};
use super::RunConfig;
use crate::error::QError;
use crate::ineq::{qhat_estimate, reverify_qhat, FormTag, IneqForm};
use crate::qcore::{QParams, Q_MAX};

/// Slices evaluated concurrently before their rows are written.
const SLICE_CHUNK: usize = 64;

pub const THM1_XS: [f64; 11] = [-0.999, -0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
const REM2_YS: [f64; 5] = [0.001, 0.1, 0.5, 0.9, 0.999];
pub const THM2_XS: [f64; 6] = [0.0, 0.1, 0.5, 1.0, 3.0, 10.0];
#[allow(clippy::approx_constant)]
pub const THM2_ALPHAS: [f64; 11] = [0.1, 0.3, 0.5, 0.9, 1.0, 1.1, 1.5, 2.0, 2.718, 5.0, 10.0];
const PAIR_ALPHAS: [f64; 3] = [0.5, 1.5, 2.5];
const PAIR_BETAS: [f64; 3] = [-0.5, 0.0, 1.5];
const EXP_BIG_XS: [f64; 4] = [0.0, 0.5, 1.0, 3.0];
const EXP_SMALL_XS: [f64; 4] = [-0.9, -0.5, -0.1, 0.0];

/// Evenly spaced `count` values over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Parameter overrides for the default per-form grids.
#[derive(Debug, Clone, Default)]
pub struct GridOverrides {
    pub xs: Option<Vec<f64>>,
    pub qs: Option<Vec<f64>>,
    pub ns: Option<Vec<i64>>,
    pub ms: Option<Vec<i64>>,
    pub alphas: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
}

/// Cartesian grid of one form: parameter variants, then `x`, then `q`.
#[derive(Debug, Clone)]
pub struct FormGrid {
    pub tag: FormTag,
    pub variants: Vec<IneqForm>,
    pub xs: Vec<f64>,
    pub qs: Vec<f64>,
}

impl FormGrid {
    /// The documented grid of a form, with any overrides applied.
    #[allow(clippy::type_complexity)]
    pub fn build(tag: FormTag, o: &GridOverrides) -> Result<Self, QError> {
        let fine_q: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).collect();
        let coarse_q: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let int_n: Vec<i64> = (1..=30).collect();
        let (xs, qs, ns, ms, alphas, betas): (&[f64], _, Vec<i64>, Vec<i64>, &[f64], &[f64]) =
            match tag {
                FormTag::Thm1 => (&THM1_XS, fine_q, int_n, vec![], &[], &[]),
                FormTag::Rem2 => (&REM2_YS, fine_q, int_n, vec![], &[], &[]),
                FormTag::Cor1 => (
                    &THM1_XS,
                    fine_q,
                    (-3..=5).collect(),
                    (1..=5).collect(),
                    &[],
                    &[],
                ),
                FormTag::Thm2 | FormTag::CorFinal => {
                    (&THM2_XS, coarse_q, vec![], vec![], &THM2_ALPHAS, &[])
                }
                FormTag::Prop1 | FormTag::Cor6 => (
                    &THM2_XS,
                    coarse_q,
                    vec![],
                    vec![],
                    &PAIR_ALPHAS,
                    &PAIR_BETAS,
                ),
                FormTag::ExpBig => (
                    &EXP_BIG_XS,
                    coarse_q,
                    vec![],
                    vec![],
                    &PAIR_ALPHAS,
                    &PAIR_BETAS,
                ),
                FormTag::ExpSmall => (
                    &EXP_SMALL_XS,
                    coarse_q,
                    vec![],
                    vec![],
                    &PAIR_ALPHAS,
                    &PAIR_BETAS,
                ),
            };
        let xs = o.xs.clone().unwrap_or_else(|| xs.to_vec());
        let qs = o.qs.clone().unwrap_or(qs);
        let ns = o.ns.clone().unwrap_or(ns);
        let ms = o.ms.clone().unwrap_or(ms);
        let alphas = o.alphas.clone().unwrap_or_else(|| alphas.to_vec());
        let betas = o.betas.clone().unwrap_or_else(|| betas.to_vec());

        let mut variants = Vec::new();
        match tag {
            FormTag::Thm1 | FormTag::Rem2 => {
                for &n in &ns {
                    variants.push(IneqForm::from_parts(tag, Some(n), None, None, None)?);
                }
            }
            FormTag::Cor1 => {
                for &m in &ms {
                    for &n in &ns {
                        variants.push(IneqForm::from_parts(tag, Some(n), Some(m), None, None)?);
                    }
                }
            }
            _ if tag.has_beta() => {
                for &a in &alphas {
                    for &b in &betas {
                        variants.push(IneqForm::from_parts(tag, None, None, Some(a), Some(b))?);
                    }
                }
            }
            _ => {
                for &a in &alphas {
                    variants.push(IneqForm::from_parts(tag, None, None, Some(a), None)?);
                }
            }
        }
        for &q in &qs {
            QParams::new(q)?;
        }
        if variants.is_empty() || xs.is_empty() || qs.is_empty() {
            return Err(QError::domain(format!("{tag}: empty grid")));
        }
        Ok(Self {
            tag,
            variants,
            xs,
            qs,
        })
    }

    pub fn slices(&self) -> usize {
        self.variants.len() * self.xs.len()
    }

    pub fn rows(&self) -> usize {
        self.slices() * self.qs.len()
    }

    fn slice(&self, i: usize) -> (IneqForm, f64) {
        (self.variants[i / self.xs.len()], self.xs[i % self.xs.len()])
    }
}

fn params_of(form: &IneqForm, q: f64, x: f64) -> Params {
    Params {
        q: Some(q),
        x: Some(x),
        n: form.n(),
        m: form.m(),
        alpha: form.alpha(),
        beta: form.beta(),
    }
}

/// One margin record. Points outside the guaranteed region are tagged
/// `.unguaranteed` and never decide the exit code. Undefined points (domain
/// edges, singular factors) and truncation failures are inconclusive.
fn point_record(form: &IneqForm, q: f64, x: f64, cfg: &RunConfig) -> (CheckRecord, bool) {
    let params = params_of(form, q, x);
    let p = match QParams::new(q) {
        Ok(p) => p,
        Err(_) => {
            return (
                CheckRecord::inconclusive(form.tag().as_str(), params, CheckKind::Margin),
                true,
            )
        }
    };
    let guaranteed = form.guaranteed(x, &p);
    let id = if guaranteed {
        form.tag().as_str().to_string()
    } else {
        format!("{}.unguaranteed", form.tag())
    };
    let rec = match form.margin(x, &p, &cfg.policy) {
        Ok(m) => CheckRecord::from_margin(id, params, &m, cfg.tol),
        Err(_) => CheckRecord::inconclusive(id, params, CheckKind::Margin),
    };
    if guaranteed {
        (rec, true)
    } else {
        (rec.non_fatal(), false)
    }
}

/// Threshold annotation for a slice that leaves the guaranteed region:
/// `observed` is the smallest certified slack `value + err` found when
/// re-checking bases above the estimate, so the record passes exactly when
/// the estimate is self-consistent.
fn qhat_record(form: &IneqForm, x: f64, cfg: &RunConfig, step: f64) -> CheckRecord {
    let id = format!("{}.qhat", form.tag());
    let base = params_of(form, 0.0, x);
    let est = match qhat_estimate(form, x, step, (0.01, 0.99), &cfg.policy) {
        Ok(e) => e,
        Err(_) => {
            return CheckRecord::inconclusive(id, Params { q: None, ..base }, CheckKind::Margin)
        }
    };
    let params = Params {
        q: Some(est.qhat),
        ..base
    };
    match reverify_qhat(form, x, &est, Q_MAX, &cfg.policy) {
        Ok(r) => match r.min_slack {
            Some(slack) => CheckRecord::margin(id, params, slack, 0.0),
            None => CheckRecord::inconclusive(id, params, CheckKind::Margin),
        },
        Err(_) => CheckRecord::inconclusive(id, params, CheckKind::Margin),
    }
}

/// Runs a form's grid, writing rows in grid order.
///
/// With `annotate`, each slice that leaves the guaranteed region gets a
/// threshold record, and the form closes with a `.min_margin` record over
/// the guaranteed points.
pub fn run_grid<W: Write>(
    grid: &FormGrid,
    cfg: &RunConfig,
    annotate: Option<f64>,
    w: &mut ReportWriter<W>,
) -> io::Result<()> {
    let mut min_slack = f64::INFINITY;
    let total = grid.slices();
    for start in (0..total).step_by(SLICE_CHUNK) {
        let end = (start + SLICE_CHUNK).min(total);
        let chunk: Vec<(Vec<CheckRecord>, f64)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let (form, x) = grid.slice(i);
                let mut recs = Vec::with_capacity(grid.qs.len() + 1);
                let mut slack = f64::INFINITY;
                let mut leaves = false;
                for &q in &grid.qs {
                    let (rec, guaranteed) = point_record(&form, q, x, cfg);
                    if guaranteed {
                        if let Some(v) = rec.observed {
                            slack = slack.min(v + rec.bound);
                        }
                    } else {
                        leaves = true;
                    }
                    recs.push(rec);
                }
                if let (Some(step), true) = (annotate, leaves) {
                    recs.push(qhat_record(&form, x, cfg, step));
                }
                (recs, slack)
            })
            .collect();
        for (recs, slack) in &chunk {
            min_slack = min_slack.min(*slack);
            w.write_all(recs)?;
        }
    }
    if annotate.is_some() && min_slack.is_finite() {
        w.write(&CheckRecord::margin(
            format!("{}.min_margin", grid.tag),
            Params::default(),
            min_slack,
            0.0,
        ))?;
    }
    Ok(())
}

/// Default x-range used when only one of `--x-min`/`--x-max` is given.
pub fn default_x_range(tag: FormTag) -> (f64, f64) {
    match tag {
        FormTag::Rem2 => (0.001, 0.999),
        FormTag::ExpSmall => (-0.9, 0.9),
        _ => (-0.99, 10.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_grid_sizes() {
        let o = GridOverrides::default();
        assert_eq!(
            FormGrid::build(FormTag::Thm1, &o).unwrap().rows(),
            19 * 11 * 30
        );
        assert_eq!(
            FormGrid::build(FormTag::Thm2, &o).unwrap().rows(),
            9 * 6 * 11
        );
        assert_eq!(
            FormGrid::build(FormTag::Cor1, &o).unwrap().variants.len(),
            45
        );
        assert_eq!(
            FormGrid::build(FormTag::Prop1, &o).unwrap().variants.len(),
            9
        );
        let o = GridOverrides {
            qs: Some(linspace(0.1, 0.9, 9)),
            ..Default::default()
        };
        assert_eq!(FormGrid::build(FormTag::Thm1, &o).unwrap().rows(), 2970);
    }

    #[test]
    fn bad_overrides_are_rejected() {
        let o = GridOverrides {
            qs: Some(vec![1.5]),
            ..Default::default()
        };
        assert!(FormGrid::build(FormTag::Thm1, &o).is_err());
        let o = GridOverrides {
            ns: Some(vec![0]),
            ..Default::default()
        };
        assert!(FormGrid::build(FormTag::Thm1, &o).is_err());
        let o = GridOverrides {
            xs: Some(vec![]),
            ..Default::default()
        };
        assert!(FormGrid::build(FormTag::Thm2, &o).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(2.0, 5.0, 1), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
    }
}
