//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when at least one check fails
//! with certainty, 2 for usage or configuration errors.

pub mod identities;
pub mod inequalities;
pub mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::error::QError;
use crate::ineq::{qhat_estimate, reverify_qhat, FormTag, IneqForm};
use crate::qcore::{q_binomial, q_factorial, q_number, QParams, TruncationPolicy, Q_MAX, Q_MIN};
use crate::qdiff::{pochhammer_real_fn, q_derivative};
use crate::qexact::EXACT_CAP;
use crate::qprod::{one_plus_inf, one_plus_real, pochhammer_fin, pochhammer_neg};
use crate::qseries::{e_q, euler_series_E, euler_series_e, E_q};

use inequalities::{default_x_range, linspace, run_grid, FormGrid, GridOverrides};
use report::{fmt_num, Format, ReportWriter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qbernoulli",
    version,
    about = "q-calculus evaluation and q-Bernoulli inequality checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Tolerance for residual checks
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Tail bound for infinite products and series
    #[arg(long, global = true, default_value_t = TruncationPolicy::DEFAULT_EPS_TAIL)]
    pub eps_tail: f64,
    /// Term budget for infinite products and series
    #[arg(long, global = true, default_value_t = TruncationPolicy::DEFAULT_MAX_TERMS)]
    pub max_terms: usize,
    /// Seed for sampled checks
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit the generation timestamp from reports
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a single quantity
    Eval(EvalArgs),
    /// Run a verification suite
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Estimate the threshold base for one inequality slice
    Qhat(QhatArgs),
    /// Tabulate an inequality margin over a grid
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    /// [alpha]_q
    Qnum,
    /// [n]_q!
    Qfact,
    /// Gaussian binomial [n; j]_q
    Qbinom,
    /// (x - a)_q^n, negative n allowed
    Poch,
    /// (1 + x)_q^inf
    PochInf,
    /// (1 + x)_q^alpha
    PochReal,
    /// Euler series of (1 + x)_q^inf
    #[value(name = "eq11", alias = "euler-product")]
    Eq11,
    /// Euler series of 1 / (1 - x)_q^inf
    #[value(name = "eq12", alias = "euler-reciprocal")]
    Eq12,
    /// small q-exponential e_q^x
    #[value(name = "e_q")]
    SmallE,
    /// big q-exponential E_q^x
    #[value(name = "E_q")]
    BigE,
    /// D_q (1 + t)_q^alpha at t = x
    Dq,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(value_enum)]
    pub quantity: Quantity,
    /// Base, 0 < q < 1
    #[arg(long)]
    pub q: f64,
    /// Argument x
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Shift a in (x - a)_q^n
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Real order alpha
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Integer order n
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<i64>,
    /// Lower index j of [n; j]_q
    #[arg(long)]
    pub j: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Exact and numerical identity checks
    Identities {
        /// Largest n for the exact Gauss binomial identity
        #[arg(long, default_value_t = 25)]
        exact_gauss_max: u32,
    },
    /// Inequality grids with threshold annotations
    Inequalities(VerifyIneqArgs),
}

#[derive(Debug, Args)]
pub struct VerifyIneqArgs {
    /// Comma-separated forms; all forms when omitted
    #[arg(long, value_delimiter = ',')]
    pub forms: Vec<FormTag>,
    /// Replace every form's x values with an evenly spaced range from here
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    /// Upper end of the x range
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Number of x points when a range is given
    #[arg(long, default_value_t = 11)]
    pub x_count: usize,
    /// Grid step of the threshold scans
    #[arg(long, default_value_t = 0.01)]
    pub qhat_step: f64,
}

#[derive(Debug, Args)]
pub struct FormParams {
    /// Inequality form
    #[arg(long)]
    pub form: FormTag,
    /// Integer order (thm1, rem2, cor1)
    #[arg(long, allow_hyphen_values = true)]
    pub n: Option<i64>,
    /// Leading order m >= 1 (cor1)
    #[arg(long)]
    pub m: Option<i64>,
    /// Real order alpha > 0
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Shift beta (prop1, cor6, exp_E, exp_e); defaults to 0
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QhatArgs {
    #[command(flatten)]
    pub form: FormParams,
    /// The x of the slice
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    /// Lowest base scanned
    #[arg(long, default_value_t = 0.001)]
    pub q_lo: f64,
    /// Highest base scanned
    #[arg(long, default_value_t = 0.999)]
    pub q_hi: f64,
    /// Grid step, at most 0.01
    #[arg(long, default_value_t = 0.001)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Inequality form
    #[arg(long)]
    pub form: FormTag,
    /// Smallest base
    #[arg(long, default_value_t = 0.1)]
    pub q_min: f64,
    /// Largest base
    #[arg(long, default_value_t = 0.9)]
    pub q_max: f64,
    /// Number of evenly spaced bases
    #[arg(long, default_value_t = 9)]
    pub q_count: usize,
    /// Lower end of an evenly spaced x grid; the form's documented x values
    /// are used when no range is given
    #[arg(long, allow_hyphen_values = true)]
    pub x_min: Option<f64>,
    /// Upper end of the x grid
    #[arg(long, allow_hyphen_values = true)]
    pub x_max: Option<f64>,
    /// Number of x points when a range is given
    #[arg(long, default_value_t = 11)]
    pub x_count: usize,
    /// Smallest integer order
    #[arg(long, allow_hyphen_values = true)]
    pub n_min: Option<i64>,
    /// Largest integer order
    #[arg(long, allow_hyphen_values = true)]
    pub n_max: Option<i64>,
    /// Comma-separated m values (cor1)
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<i64>,
    /// Comma-separated alpha values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<f64>,
    /// Comma-separated beta values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,
}

/// Validated run-wide settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tol: f64,
    pub policy: TruncationPolicy,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub timestamp: bool,
}

impl RunConfig {
    pub fn from_opts(g: &GlobalOpts) -> Result<Self, CliError> {
        if !(g.tol > 0.0 && g.tol.is_finite()) {
            return Err(CliError::Usage(format!(
                "--tol must be positive, got {}",
                g.tol
            )));
        }
        let policy = TruncationPolicy::new(g.eps_tail, g.max_terms)?;
        Ok(Self {
            tol: g.tol,
            policy,
            seed: g.seed,
            format: g.format,
            out: g.out.clone(),
            timestamp: !g.no_timestamp,
        })
    }

    fn sink(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
                CliError::Usage(format!("cannot open {}: {e}", path.display()))
            })?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn writer(&self) -> Result<ReportWriter<Box<dyn Write>>, CliError> {
        let ts = self.timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Ok(ReportWriter::new(self.sink()?, self.format, ts))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Q(#[from] QError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Q(QError::TruncationBudgetExceeded { .. } | QError::NonFinite(_)) => {
                EXIT_FAIL
            }
            CliError::Io(_) => EXIT_FAIL,
            _ => EXIT_USAGE,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        // the reader went away, e.g. `| head`
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = RunConfig::from_opts(&cli.global)?;
    match cli.command {
        Command::Eval(a) => cmd_eval(&cfg, &a),
        Command::Verify(VerifyCommand::Identities { exact_gauss_max }) => {
            cmd_verify_identities(&cfg, exact_gauss_max)
        }
        Command::Verify(VerifyCommand::Inequalities(a)) => cmd_verify_inequalities(&cfg, &a),
        Command::Qhat(a) => cmd_qhat(&cfg, &a),
        Command::Sweep(a) => cmd_sweep(&cfg, &a),
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("missing required flag --{flag}")))
}

fn eval_value(cfg: &RunConfig, a: &EvalArgs) -> Result<(f64, Option<f64>), CliError> {
    let p = QParams::new(a.q)?;
    let pol = &cfg.policy;
    let nonneg = |n: i64| {
        u32::try_from(n).map_err(|_| usage(format!("--n must be a nonnegative integer, got {n}")))
    };
    Ok(match a.quantity {
        Quantity::Qnum => (q_number(need(a.alpha, "alpha")?, &p), None),
        Quantity::Qfact => (q_factorial(nonneg(need(a.n, "n")?)?, &p), None),
        Quantity::Qbinom => (
            q_binomial(nonneg(need(a.n, "n")?)?, need(a.j, "j")?, &p),
            None,
        ),
        Quantity::Poch => {
            let (x, c, n) = (need(a.x, "x")?, need(a.a, "a")?, need(a.n, "n")?);
            let k = u32::try_from(n.unsigned_abs()).map_err(|_| usage("--n out of range"))?;
            let v = if n >= 0 {
                pochhammer_fin(x, c, k, &p)
            } else {
                pochhammer_neg(x, c, k, &p)?
            };
            (v, None)
        }
        Quantity::PochInf => {
            let t = one_plus_inf(need(a.x, "x")?, &p, pol)?;
            (t.value, Some(t.abs_err()))
        }
        Quantity::PochReal => {
            let t = one_plus_real(need(a.x, "x")?, need(a.alpha, "alpha")?, &p, pol)?;
            (t.value, Some(t.abs_err()))
        }
        Quantity::Eq11 | Quantity::Eq12 | Quantity::SmallE | Quantity::BigE => {
            let x = need(a.x, "x")?;
            let s = match a.quantity {
                Quantity::Eq11 => euler_series_E(x, &p, pol)?,
                Quantity::Eq12 => euler_series_e(x, &p, pol)?,
                Quantity::SmallE => e_q(x, &p, pol)?,
                _ => E_q(x, &p, pol)?,
            };
            (s.value, Some(s.value.abs() * s.rel_err))
        }
        Quantity::Dq => {
            let f = pochhammer_real_fn(need(a.alpha, "alpha")?, p, *pol);
            (q_derivative(&f, need(a.x, "x")?, &p)?, None)
        }
    })
}

fn quantity_name(q: Quantity) -> String {
    use clap::ValueEnum;
    q.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

pub fn cmd_eval(cfg: &RunConfig, a: &EvalArgs) -> Result<i32, CliError> {
    let (value, err) = eval_value(cfg, a)?;
    let name = quantity_name(a.quantity);
    let mut out = cfg.sink()?;
    match cfg.format {
        Format::Csv => {
            writeln!(out, "quantity,value,error_bound")?;
            writeln!(
                out,
                "{name},{},{}",
                fmt_num(value),
                err.map(fmt_num).unwrap_or_default()
            )?;
        }
        Format::Json => {
            let v = serde_json::json!({ "quantity": name, "value": value, "error_bound": err });
            writeln!(out, "{v}")?;
        }
    }
    out.flush()?;
    Ok(EXIT_OK)
}

pub fn cmd_verify_identities(cfg: &RunConfig, exact_gauss_max: u32) -> Result<i32, CliError> {
    if exact_gauss_max > EXACT_CAP {
        return Err(usage(format!(
            "--exact-gauss-max may not exceed {EXACT_CAP}"
        )));
    }
    let mut w = cfg.writer()?;
    w.write_all(&identities::gauss_exact(exact_gauss_max))?;
    w.write_all(&identities::binomial_float_vs_exact(cfg.tol))?;
    w.write_all(&identities::binomial_limit(cfg.tol))?;
    w.write_all(&identities::euler_product(cfg))?;
    w.write_all(&identities::euler_reciprocal(cfg))?;
    w.write_all(&identities::telescoping(cfg))?;
    w.write_all(&identities::lemma1(cfg))?;
    w.write_all(&identities::exponentials(cfg))?;
    w.write_all(&identities::heine(cfg))?;
    w.write_all(&identities::mean_value(cfg))?;
    Ok(w.finish()?.exit_code())
}

fn x_grid(
    tag: FormTag,
    lo: Option<f64>,
    hi: Option<f64>,
    count: usize,
) -> Result<Option<Vec<f64>>, CliError> {
    if lo.is_none() && hi.is_none() {
        return Ok(None);
    }
    let (dlo, dhi) = default_x_range(tag);
    let (lo, hi) = (lo.unwrap_or(dlo), hi.unwrap_or(dhi));
    if !(lo <= hi) || count == 0 {
        return Err(usage(format!(
            "empty x grid: [{lo}, {hi}] with {count} points"
        )));
    }
    let floor = if tag == FormTag::Rem2 { 0.0 } else { -1.0 };
    if lo <= floor {
        return Err(usage(format!("{tag}: x must exceed {floor}, got {lo}")));
    }
    Ok(Some(linspace(lo, hi, count)))
}

pub fn cmd_verify_inequalities(cfg: &RunConfig, a: &VerifyIneqArgs) -> Result<i32, CliError> {
    if !(a.qhat_step > 0.0 && a.qhat_step <= 0.01) {
        return Err(usage(format!(
            "--qhat-step must lie in (0, 0.01], got {}",
            a.qhat_step
        )));
    }
    let forms: Vec<FormTag> = if a.forms.is_empty() {
        FormTag::ALL.to_vec()
    } else {
        a.forms.clone()
    };
    let grids = forms
        .iter()
        .map(|&tag| {
            let o = GridOverrides {
                xs: x_grid(tag, a.x_min, a.x_max, a.x_count)?,
                ..Default::default()
            };
            Ok(FormGrid::build(tag, &o)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut w = cfg.writer()?;
    for g in &grids {
        run_grid(g, cfg, Some(a.qhat_step), &mut w)?;
    }
    Ok(w.finish()?.exit_code())
}

pub fn cmd_sweep(cfg: &RunConfig, a: &SweepArgs) -> Result<i32, CliError> {
    if !(a.q_min <= a.q_max) || a.q_count == 0 {
        return Err(usage(format!(
            "empty q grid: [{}, {}] with {} points",
            a.q_min, a.q_max, a.q_count
        )));
    }
    let ns = match (a.n_min, a.n_max) {
        (None, None) => None,
        (lo, hi) => {
            let lo = lo.unwrap_or(1);
            let hi = hi.unwrap_or(30);
            if lo > hi {
                return Err(usage(format!("empty n range [{lo}, {hi}]")));
            }
            Some((lo..=hi).collect())
        }
    };
    let nonempty = |v: &Vec<f64>| (!v.is_empty()).then(|| v.clone());
    let o = GridOverrides {
        xs: x_grid(a.form, a.x_min, a.x_max, a.x_count)?,
        qs: Some(linspace(a.q_min, a.q_max, a.q_count)),
        ns,
        ms: (!a.m.is_empty()).then(|| a.m.clone()),
        alphas: nonempty(&a.alpha),
        betas: nonempty(&a.beta),
    };
    let grid = FormGrid::build(a.form, &o)?;
    let mut w = cfg.writer()?;
    run_grid(&grid, cfg, None, &mut w)?;
    Ok(w.finish()?.exit_code())
}

pub fn cmd_qhat(cfg: &RunConfig, a: &QhatArgs) -> Result<i32, CliError> {
    let f = &a.form;
    let form = IneqForm::from_parts(f.form, f.n, f.m, f.alpha, f.beta)?;
    if !(a.q_lo >= Q_MIN && a.q_hi <= Q_MAX && a.q_lo < a.q_hi) {
        return Err(usage(format!("invalid q range [{}, {}]", a.q_lo, a.q_hi)));
    }
    let est = qhat_estimate(&form, a.x, a.step, (a.q_lo, a.q_hi), &cfg.policy)?;
    let rev = reverify_qhat(&form, a.x, &est, Q_MAX, &cfg.policy)?;
    let (wq, wv, we) = match est.witness_below {
        Some((q, m)) => (Some(q), Some(m.value), Some(m.err)),
        None => (None, None, None),
    };
    let mut out = cfg.sink()?;
    match cfg.format {
        Format::Csv => {
            writeln!(
                out,
                "form,x,qhat,grid_step,held_on_all_grid,witness_q,witness_margin,witness_err,reverified,inconclusive"
            )?;
            let o = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                form.tag(),
                fmt_num(a.x),
                fmt_num(est.qhat),
                fmt_num(est.grid_step),
                est.held_on_all_grid,
                o(wq),
                o(wv),
                o(we),
                rev.consistent(),
                est.inconclusive.len() + rev.inconclusive.len()
            )?;
        }
        Format::Json => {
            let v = serde_json::json!({
                "form": form.tag().as_str(),
                "n": form.n(),
                "m": form.m(),
                "alpha": form.alpha(),
                "beta": form.beta(),
                "x": a.x,
                "qhat": est.qhat,
                "grid_step": est.grid_step,
                "held_on_all_grid": est.held_on_all_grid,
                "witness_below": wq.map(|q| serde_json::json!({ "q": q, "margin": wv, "err": we })),
                "reverified": rev.consistent(),
                "inconclusive": est.inconclusive.len() + rev.inconclusive.len(),
            });
            writeln!(out, "{v}")?;
        }
    }
    out.flush()?;
    Ok(if rev.consistent() { EXIT_OK } else { EXIT_FAIL })
}
