// SPDX-License-Identifier: Apache-2.0

//! Summary rows and the fixed-order `summary.csv` layout.

use std::io::Write;

use cfl_core::stats::{MeanAccumulator, Proportion, Z95};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Column order of `summary.csv`.
pub const CSV_HEADER: [&str; 9] = ["estimator", "estimate", "se", "ci_low", "ci_high", "ci_method", "trials", "bound", "pass"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Wilson score interval at 95%.
    Wilson,
    /// Normal interval `± 1.96·SE` at 95%.
    Normal,
    /// Closed-form or counted value without sampling error.
    Exact,
    None,
}

impl CiMethod {
    fn as_str(self) -> &'static str {
        match self {
            CiMethod::Wilson => "wilson",
            CiMethod::Normal => "normal",
            CiMethod::Exact => "exact",
            CiMethod::None => "none",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "wilson" => CiMethod::Wilson,
            "normal" => CiMethod::Normal,
            "exact" => CiMethod::Exact,
            "none" => CiMethod::None,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No data to decide on.
    Inconclusive,
    /// Reported without an assertion.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok { Verdict::Pass } else { Verdict::Fail }
    }

    fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Info => "info",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pass" => Verdict::Pass,
            "fail" => Verdict::Fail,
            "inconclusive" => Verdict::Inconclusive,
            "info" => Verdict::Info,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: String,
    pub estimate: Option<f64>,
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub ci_method: CiMethod,
    pub trials: u64,
    pub bound: Option<f64>,
    pub pass: Verdict,
}

impl SummaryRow {
    /// An exactly known value.
    pub fn exact(estimator: &str, value: f64, bound: Option<f64>, pass: Verdict) -> Self {
        Self {
            estimator: estimator.into(),
            estimate: Some(value),
            se: Some(0.0),
            ci: Some((value, value)),
            ci_method: CiMethod::Exact,
            trials: 0,
            bound,
            pass,
        }
    }

    /// A proportion with its Wilson interval, shifted by `offset`; inconclusive without trials.
    pub fn proportion(estimator: &str, p: Proportion, offset: f64) -> Self {
        let ci = p.wilson(Z95).map(|(lo, hi)| (lo - offset, hi - offset));
        Self {
            estimator: estimator.into(),
            estimate: p.estimate().map(|v| v - offset),
            se: p.se(),
            ci,
            ci_method: CiMethod::Wilson,
            trials: p.trials,
            bound: None,
            pass: if p.trials == 0 { Verdict::Inconclusive } else { Verdict::Info },
        }
    }

    /// A sample mean with its normal interval; inconclusive without samples.
    pub fn mean(estimator: &str, acc: &MeanAccumulator) -> Self {
        let (m, se) = (acc.mean(), acc.se());
        Self {
            estimator: estimator.into(),
            estimate: m,
            se,
            ci: m.zip(se).map(|(m, s)| (m - Z95 * s, m + Z95 * s)),
            ci_method: CiMethod::Normal,
            trials: acc.count(),
            bound: None,
            pass: if acc.count() == 0 { Verdict::Inconclusive } else { Verdict::Info },
        }
    }

    /// Attaches `bound` and the verdict of `check(estimate, se)`, leaving
    /// inconclusive rows untouched.
    pub fn judged(mut self, bound: Option<f64>, check: impl FnOnce(f64, f64) -> bool) -> Self {
        self.bound = bound;
        if self.pass != Verdict::Inconclusive {
            let (e, s) = (self.estimate.unwrap_or(f64::NAN), self.se.unwrap_or(0.0));
            self.pass = Verdict::from_bool(check(e, s));
        }
        self
    }

    pub fn with_pass(mut self, pass: Verdict) -> Self {
        self.pass = pass;
        self
    }
}

/// `p̂ − 1/2` for hits of the target bit, with its Wilson interval.
pub fn estimate_bias(target_hits: impl IntoIterator<Item = bool>) -> SummaryRow {
    let mut p = Proportion::default();
    for hit in target_hits {
        p.record(hit);
    }
    SummaryRow::proportion("bias", p, 0.5)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Writes `rows` as CSV in [`CSV_HEADER`] order.
pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for row in rows {
        out.write_record([
            row.estimator.clone(),
            fmt_opt(row.estimate),
            fmt_opt(row.se),
            fmt_opt(row.ci.map(|c| c.0)),
            fmt_opt(row.ci.map(|c| c.1)),
            row.ci_method.as_str().into(),
            row.trials.to_string(),
            fmt_opt(row.bound),
            row.pass.as_str().into(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn parse_opt(field: &str) -> Result<Option<f64>, CliError> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| CliError::Config(format!("bad number `{field}` in summary")))
}

/// Reads a summary written by [`write_summary`].
pub fn read_summary<R: std::io::Read>(r: R) -> Result<Vec<SummaryRow>, CliError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(CliError::Config(format!("unexpected summary header {header:?}")));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let bad = |what: &str, v: &str| CliError::Config(format!("bad {what} `{v}` in summary"));
            let ci = match (parse_opt(&rec[3])?, parse_opt(&rec[4])?) {
                (Some(lo), Some(hi)) => Some((lo, hi)),
                _ => None,
            };
            Ok(SummaryRow {
                estimator: rec[0].to_owned(),
                estimate: parse_opt(&rec[1])?,
                se: parse_opt(&rec[2])?,
                ci,
                ci_method: CiMethod::parse(&rec[5]).ok_or_else(|| bad("ci_method", &rec[5]))?,
                trials: rec[6].parse().map_err(|_| bad("trials", &rec[6]))?,
                bound: parse_opt(&rec[7])?,
                pass: Verdict::parse(&rec[8]).ok_or_else(|| bad("pass", &rec[8]))?,
            })
        })
        .collect()
}

/// Exit status for a set of rows: `false` iff some row failed.
pub fn all_pass(rows: &[SummaryRow]) -> bool {
    rows.iter().all(|r| r.pass != Verdict::Fail)
}
