//! Check records and the streaming CSV/JSON report writer.

use std::io::{self, Write};

use serde::Serialize;

use crate::ineq::Margin;

pub const CSV_HEADER: &str = "check_id,q,x,n,m,alpha,beta,observed,bound,pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// Passes when `observed <= bound`.
    Residual,
    /// Passes when `observed >= -bound`.
    Margin,
}

/// Outcome column. `Inconclusive` marks points that could not be evaluated
/// within the truncation budget; they count neither as passes nor failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[serde(rename = "true")]
    Pass,
    #[serde(rename = "false")]
    Fail,
    Inconclusive,
}

impl Status {
    fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "true",
            Status::Fail => "false",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Params {
    pub q: Option<f64>,
    pub x: Option<f64>,
    pub n: Option<i64>,
    pub m: Option<i64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl Params {
    pub fn qx(q: f64, x: f64) -> Self {
        Self {
            q: Some(q),
            x: Some(x),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_id: String,
    #[serde(flatten)]
    pub params: Params,
    pub observed: Option<f64>,
    pub bound: f64,
    pub pass: Status,
    pub kind: CheckKind,
    /// Failures of non-fatal records are reported but do not change the exit
    /// code; used for points outside an inequality's guaranteed region.
    #[serde(skip)]
    pub fatal: bool,
}

impl CheckRecord {
    pub fn residual(id: impl Into<String>, params: Params, observed: f64, bound: f64) -> Self {
        // NaN residuals fail
        let pass = if observed <= bound {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            check_id: id.into(),
            params,
            observed: Some(observed),
            bound,
            pass,
            kind: CheckKind::Residual,
            fatal: true,
        }
    }

    pub fn margin(id: impl Into<String>, params: Params, observed: f64, bound: f64) -> Self {
        let pass = if observed >= -bound {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            check_id: id.into(),
            params,
            observed: Some(observed),
            bound,
            pass,
            kind: CheckKind::Margin,
            fatal: true,
        }
    }

    /// Margin record whose bound is the larger of its certified error and
    /// the run tolerance.
    pub fn from_margin(id: impl Into<String>, params: Params, m: &Margin, tol: f64) -> Self {
        Self::margin(id, params, m.value, m.err.max(tol))
    }

    pub fn inconclusive(id: impl Into<String>, params: Params, kind: CheckKind) -> Self {
        Self {
            check_id: id.into(),
            params,
            observed: None,
            bound: 0.0,
            pass: Status::Inconclusive,
            kind,
            fatal: true,
        }
    }

    pub fn non_fatal(mut self) -> Self {
        self.fatal = false;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    /// Failures that decide the exit code.
    pub failed: usize,
    pub inconclusive: usize,
    /// Failing records outside a guaranteed region.
    pub expected_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl Summary {
    fn add(&mut self, r: &CheckRecord) {
        self.total += 1;
        match (r.pass, r.fatal) {
            (Status::Pass, _) => self.passed += 1,
            (Status::Fail, true) => self.failed += 1,
            (Status::Fail, false) => self.expected_violations += 1,
            (Status::Inconclusive, _) => self.inconclusive += 1,
        }
    }

    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed > 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Compact number formatting shared by the CSV writer and `eval`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// Writes records as they arrive; only the running summary is kept.
pub struct ReportWriter<W: Write> {
    out: W,
    format: Format,
    timestamp: Option<u64>,
    summary: Summary,
    started: bool,
}

impl<W: Write> ReportWriter<W> {
    pub fn new(out: W, format: Format, timestamp: Option<u64>) -> Self {
        Self {
            out,
            format,
            timestamp,
            summary: Summary::default(),
            started: false,
        }
    }

    fn start(&mut self) -> io::Result<()> {
        if self.started {
            return Ok(());
        }
        self.started = true;
        match self.format {
            Format::Csv => {
                if let Some(t) = self.timestamp {
                    writeln!(self.out, "# generated_at={t}")?;
                }
                writeln!(self.out, "{CSV_HEADER}")
            }
            Format::Json => writeln!(self.out, "["),
        }
    }

    pub fn write(&mut self, r: &CheckRecord) -> io::Result<()> {
        self.start()?;
        self.summary.add(r);
        match self.format {
            Format::Csv => {
                let p = &r.params;
                writeln!(
                    self.out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.check_id,
                    opt_num(p.q),
                    opt_num(p.x),
                    opt(p.n),
                    opt(p.m),
                    opt_num(p.alpha),
                    opt_num(p.beta),
                    opt_num(r.observed),
                    fmt_num(r.bound),
                    r.pass.as_str()
                )
            }
            Format::Json => {
                let line = serde_json::to_string(r).map_err(io::Error::other)?;
                writeln!(self.out, "  {line},")
            }
        }
    }

    pub fn write_all<'a>(
        &mut self,
        rs: impl IntoIterator<Item = &'a CheckRecord>,
    ) -> io::Result<()> {
        rs.into_iter().try_for_each(|r| self.write(r))
    }

    /// Closes the report and returns its summary.
    pub fn finish(mut self) -> io::Result<Summary> {
        self.start()?;
        let mut summary = self.summary;
        summary.generated_at = self.timestamp;
        if self.format == Format::Json {
            let s = serde_json::json!({ "summary": summary });
            writeln!(self.out, "  {s}")?;
            writeln!(self.out, "]")?;
        }
        self.out.flush()?;
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<CheckRecord> {
        vec![
            CheckRecord::residual("a", Params::qx(0.5, 1.0), 1e-12, 1e-10),
            CheckRecord::margin(
                "b",
                Params {
                    n: Some(3),
                    ..Default::default()
                },
                -1.0,
                0.1,
            )
            .non_fatal(),
            CheckRecord::inconclusive("c", Params::default(), CheckKind::Margin),
            CheckRecord::residual("d", Params::default(), f64::NAN, 1.0),
        ]
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let mut w = ReportWriter::new(&mut buf, Format::Csv, None);
        w.write_all(&records()).unwrap();
        let s = w.finish().unwrap();
        assert_eq!(s.total, 4);
        assert_eq!(s.passed, 1);
        assert_eq!(s.failed, 1);
        assert_eq!(s.expected_violations, 1);
        assert_eq!(s.inconclusive, 1);
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "a,0.5,1,,,,,1e-12,1e-10,true");
        assert_eq!(lines[2], "b,,,3,,,,-1,0.1,false");
        assert_eq!(lines[3], "c,,,,,,,,0,inconclusive");
    }

    #[test]
    fn csv_timestamp_line() {
        let mut buf = Vec::new();
        ReportWriter::new(&mut buf, Format::Csv, Some(17))
            .finish()
            .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("# generated_at=17\n{CSV_HEADER}\n")
        );
    }

    #[test]
    fn json_is_valid_array_with_summary() {
        let mut buf = Vec::new();
        let mut w = ReportWriter::new(&mut buf, Format::Json, None);
        w.write_all(&records()[..3]).unwrap();
        w.finish().unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let arr = v.as_array().unwrap();
        assert_eq!(arr.len(), 4);
        assert_eq!(arr[0]["check_id"], "a");
        assert_eq!(arr[0]["q"], 0.5);
        assert_eq!(arr[0]["n"], serde_json::Value::Null);
        assert_eq!(arr[0]["pass"], "true");
        assert_eq!(arr[2]["pass"], "inconclusive");
        assert_eq!(arr[3]["summary"]["total"], 3);
        assert!(arr[3]["summary"].get("generated_at").is_none());
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.75), "1.75");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1e-300), "1e-300");
        assert_eq!(fmt_num(-2.5e20), "-2.5e20");
    }
}
