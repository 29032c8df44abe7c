//! Invariant reports: schema-versioned records, CSV data bundles and suite summaries.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::scenario::CheckId;

pub const REPORT_SCHEMA: &str = "indexlab.report/1";
pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A component error stopped the check.
    Error,
    /// Exploratory result: recorded, never judged.
    Recorded,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        matches!(self, Self::Fail | Self::Error)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Error => "error",
            Self::Recorded => "recorded",
        }
    }
}

/// An integer computed by the library, with the evidence that certified it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerVerdict {
    pub name: String,
    pub value: i64,
    pub evidence: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckError {
    /// Term of a composite identity that failed, when known.
    pub term: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: CheckId,
    pub verdict: Verdict,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub integers: Vec<IntegerVerdict>,
    /// Per-term attribution of composite identities.
    pub terms: BTreeMap<String, f64>,
    pub diagnostics: serde_json::Value,
    pub error: Option<CheckError>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub schema_version: String,
    pub library_version: String,
    pub scenario: String,
    pub scenario_hash: String,
    pub checks: Vec<CheckRecord>,
    /// Exploratory probes; they never affect the exit status.
    pub exploratory: Vec<CheckRecord>,
}

impl InvariantReport {
    pub fn new(scenario: &str, scenario_hash: &str) -> Self {
        Self {
            schema_version: REPORT_SCHEMA.into(),
            library_version: LIBRARY_VERSION.into(),
            scenario: scenario.into(),
            scenario_hash: scenario_hash.into(),
            checks: vec![],
            exploratory: vec![],
        }
    }

    pub fn push(&mut self, r: CheckRecord) {
        if r.check.is_exploratory() {
            self.exploratory.push(r);
        } else {
            self.checks.push(r);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.verdict.is_failure())
    }

    pub fn records(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().chain(&self.exploratory)
    }

    /// Copy with all timing fields zeroed; two runs of one scenario agree on this exactly.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for c in r.checks.iter_mut().chain(r.exploratory.iter_mut()) {
            c.wall_time_s = 0.0;
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRow {
    pub t: f64,
    pub branch_id: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRow {
    pub index: usize,
    pub lambda: f64,
    pub grid_h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaTraceRow {
    pub t: f64,
    pub weighted_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernRow {
    pub x: f64,
    pub density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub t: f64,
    pub index: usize,
    pub phase: f64,
}

/// Plot data of one scenario run, keyed by series name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub branches: BTreeMap<String, Vec<BranchRow>>,
    pub eigenvalues: BTreeMap<String, Vec<EigenvalueRow>>,
    pub eta_traces: BTreeMap<String, Vec<EtaTraceRow>>,
    pub chern: BTreeMap<String, Vec<ChernRow>>,
    pub w_phases: BTreeMap<String, Vec<PhaseRow>>,
}

impl Artifacts {
    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
            && self.eigenvalues.is_empty()
            && self.eta_traces.is_empty()
            && self.chern.is_empty()
            && self.w_phases.is_empty()
    }

    pub fn merge(&mut self, other: Artifacts) {
        self.branches.extend(other.branches);
        self.eigenvalues.extend(other.eigenvalues);
        self.eta_traces.extend(other.eta_traces);
        self.chern.extend(other.chern);
        self.w_phases.extend(other.w_phases);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Records,
    Csv,
    Both,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "records" => Ok(Self::Records),
            "csv" => Ok(Self::Csv),
            "both" => Ok(Self::Both),
            _ => Err(format!("unknown format '{s}' (records, csv, both)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmitError + '_ {
    move |source| EmitError::Io { path: path.to_path_buf(), source }
}

/// Name of the append-only record file inside an output directory.
pub const RECORDS_FILE: &str = "reports.jsonl";

/// Appends the record to `<dir>/reports.jsonl` and/or writes the CSV bundle under
/// `<dir>/<scenario>/`. Returns the paths written.
pub fn emit_report(report: &InvariantReport, artifacts: &Artifacts, dir: &Path, format: Format) -> Result<Vec<PathBuf>, EmitError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    if matches!(format, Format::Records | Format::Both) {
        let path = dir.join(RECORDS_FILE);
        let line = serde_json::to_string(report).map_err(|source| EmitError::Json { path: path.clone(), source })?;
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        writeln!(f, "{line}").map_err(io_err(&path))?;
        written.push(path);
    }
    if matches!(format, Format::Csv | Format::Both) && !artifacts.is_empty() {
        let sub = dir.join(&report.scenario);
        fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        written.extend(write_series(&sub, "branches", &artifacts.branches)?);
        written.extend(write_series(&sub, "eigenvalues", &artifacts.eigenvalues)?);
        written.extend(write_series(&sub, "eta-trace", &artifacts.eta_traces)?);
        written.extend(write_series(&sub, "chern", &artifacts.chern)?);
        written.extend(write_series(&sub, "w-phases", &artifacts.w_phases)?);
    }
    Ok(written)
}

fn write_series<T: Serialize>(dir: &Path, kind: &str, series: &BTreeMap<String, Vec<T>>) -> Result<Vec<PathBuf>, EmitError> {
    let mut out = Vec::new();
    for (name, rows) in series {
        let path = dir.join(format!("{kind}.{}.csv", sanitize(name)));
        write_csv(&path, rows)?;
        out.push(path);
    }
    Ok(out)
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), EmitError> {
    let csv_err = |source| EmitError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// All records of an append-only record file, in order.
pub fn read_reports(path: &Path) -> Result<Vec<InvariantReport>, EmitError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| EmitError::Json { path: path.to_path_buf(), source })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub check: String,
    pub verdict: String,
    pub residual: Option<f64>,
    pub wall_time_s: f64,
}

/// One row per (scenario, check), exploratory checks included.
pub fn summary_rows(reports: &[InvariantReport]) -> Vec<SummaryRow> {
    reports
        .iter()
        .flat_map(|r| {
            r.records().map(move |c| SummaryRow {
                scenario: r.scenario.clone(),
                check: c.check.name().into(),
                verdict: c.verdict.as_str().into(),
                residual: c.residual,
                wall_time_s: c.wall_time_s,
            })
        })
        .collect()
}

/// Plain-text table of the summary rows.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let w0 = rows.iter().map(|r| r.scenario.len()).max().unwrap_or(8).max(8);
    let w1 = rows.iter().map(|r| r.check.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<w0$}  {:<w1$}  {:<8}  {:>10}  {:>8}\n", "scenario", "check", "verdict", "residual", "time[s]");
    for r in rows {
        let res = r.residual.map_or("-".to_string(), |x| format!("{x:.2e}"));
        s.push_str(&format!("{:<w0$}  {:<w1$}  {:<8}  {:>10}  {:>8.2}\n", r.scenario, r.check, r.verdict, res, r.wall_time_s));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> InvariantReport {
        let mut r = InvariantReport::new("demo", "abc");
        r.push(CheckRecord {
            check: CheckId::ClosedIndex,
            verdict: Verdict::Pass,
            lhs: Some(-1.0),
            rhs: Some(-1.0),
            residual: Some(0.0),
            tolerance: None,
            integers: vec![IntegerVerdict { name: "index".into(), value: -1, evidence: serde_json::json!({"gap": 1e9}) }],
            terms: BTreeMap::from([("chern".to_string(), 1.0)]),
            diagnostics: serde_json::json!({}),
            error: None,
            wall_time_s: 0.25,
        });
        r
    }

    #[test]
    fn record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        let mut art = Artifacts::default();
        art.branches.insert("flow".into(), vec![BranchRow { t: 0.0, branch_id: 0, lambda: 0.5 }]);
        emit_report(&r, &art, dir.path(), Format::Both).unwrap();
        emit_report(&r, &art, dir.path(), Format::Records).unwrap();
        let back = read_reports(&dir.path().join(RECORDS_FILE)).unwrap();
        assert_eq!(back, vec![r.clone(), r]);
        let text = fs::read_to_string(dir.path().join("demo/branches.flow.csv")).unwrap();
        assert_eq!(text.lines().next(), Some("t,branch_id,lambda"));
    }

    #[test]
    fn exploratory_is_segregated() {
        let mut r = sample();
        let mut probe = r.checks[0].clone();
        probe.check = CheckId::ConjugatedConditionProbe;
        probe.verdict = Verdict::Recorded;
        r.push(probe);
        assert_eq!(r.checks.len(), 1);
        assert_eq!(r.exploratory.len(), 1);
        assert!(r.passed());
        assert_eq!(summary_rows(&[r]).len(), 2);
    }
}
