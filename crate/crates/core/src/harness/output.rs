//! Report files.
//!
//! Per scenario `<id>.<kind>.csv`; across scenarios `summary.json`,
//! `ratio_curves.csv` (long format, one row per plotted point),
//! `manifest.json` and `timings.json`. Everything except `timings.json` is a
//! pure function of the config text, seeds and sample scale.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::run::{ConditionOutcome, RuinScenario, ScenarioOutcome, ScenarioReport};
use crate::deviation::RatioReport;
use crate::error::{Error, Result};
use crate::risk::RiskModelSpec;
use crate::stream::{fnv1a64, Role};
use crate::trend::TrendReport;

pub const SCHEMA_VERSION: u32 = 1;

const SCAN_HEADER: [&str; 26] = [
    "schema_version",
    "scenario_id",
    "seed",
    "samples",
    "n",
    "t",
    "x",
    "method",
    "p_hat",
    "stderr",
    "hits",
    "n_fbar",
    "ratio",
    "ci_lo",
    "ci_hi",
    "well_estimated",
    "verdict",
    "functional",
    "q1",
    "q2",
    "c",
    "D",
    "tau_kind",
    "lower_p_hat",
    "upper_p_hat",
    "sandwich_violations",
];

const TREND_HEADER: [&str; 10] = [
    "schema_version",
    "scenario_id",
    "seed",
    "samples",
    "series",
    "at",
    "value",
    "stderr",
    "conclusive",
    "verdict",
];

const DOMINATING_HEADER: [&str; 15] = [
    "schema_version",
    "scenario_id",
    "seed",
    "samples",
    "n",
    "side",
    "thresholds",
    "ratio",
    "stderr",
    "joint",
    "product",
    "gu_hat",
    "gl_hat",
    "certified_gu",
    "growth_detected",
];

const CURVE_HEADER: [&str; 9] = [
    "schema_version",
    "scenario_id",
    "kind",
    "seed",
    "samples",
    "series",
    "x",
    "value",
    "stderr",
];

/// Run-level facts recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunInfo {
    pub config_sha256: String,
    pub seed_override: Option<u64>,
    pub samples_scale: f64,
    /// Worker threads; written to `timings.json` only.
    #[serde(skip)]
    pub threads: usize,
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

struct Rows {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Rows {
    fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path.display(), e))?;
        w.write_record(self.header).map_err(|e| Error::io(path.display(), e))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Error::io(path.display(), e))?;
        }
        w.flush().map_err(|e| Error::io(path.display(), e))
    }
}

/// Identity columns shared by every row.
struct Ident<'a> {
    id: &'a str,
    kind: &'a str,
    seed: u64,
    samples: u64,
}

impl Ident<'_> {
    fn lead(&self) -> Vec<String> {
        vec![SCHEMA_VERSION.to_string(), self.id.to_string(), self.seed.to_string(), self.samples.to_string()]
    }

    fn curve(&self, curves: &mut Rows, series: &str, x: f64, value: f64, stderr: Option<f64>) {
        curves.push(vec![
            SCHEMA_VERSION.to_string(),
            self.id.to_string(),
            self.kind.to_string(),
            self.seed.to_string(),
            self.samples.to_string(),
            series.to_string(),
            num(x),
            num(value),
            opt(stderr),
        ]);
    }
}

/// Extra columns of reinsurance and ruin rows.
#[derive(Default)]
struct ModelCols {
    functional: String,
    q1: String,
    q2: String,
    c: String,
    d: String,
    tau_kind: String,
}

impl ModelCols {
    fn of(model: &RiskModelSpec, functional: &str, tau: &str) -> Self {
        Self {
            functional: functional.to_string(),
            q1: num(model.q1),
            q2: num(model.q2),
            c: num(model.premium_rate),
            d: num(model.retention),
            tau_kind: tau.to_string(),
        }
    }
}

fn series_of(n: Option<u64>, t: Option<f64>) -> String {
    match (n, t) {
        (Some(n), _) => format!("n={n}"),
        (None, Some(t)) => format!("t={t}"),
        _ => "tau".to_string(),
    }
}

fn scan_rows(ident: &Ident, report: &RatioReport, model: &ModelCols, rows: &mut Rows, curves: &mut Rows) {
    for e in &report.entries {
        let mut r = ident.lead();
        r.extend([
            opt(e.n),
            opt(e.t),
            num(e.x),
            e.estimate.method.to_string(),
            num(e.estimate.p_hat),
            num(e.estimate.stderr),
            e.estimate.hits.to_string(),
            num(e.n_fbar),
            num(e.ratio),
            num(e.ci_lo),
            num(e.ci_hi),
            e.well_estimated.to_string(),
            report.verdict.to_string(),
            model.functional.clone(),
            model.q1.clone(),
            model.q2.clone(),
            model.c.clone(),
            model.d.clone(),
            model.tau_kind.clone(),
            String::new(),
            String::new(),
            String::new(),
        ]);
        rows.push(r);
        ident.curve(curves, &series_of(e.n, e.t), e.x, e.ratio, Some(e.estimate.stderr / e.n_fbar));
    }
}

fn ruin_rows(ident: &Ident, r: &RuinScenario, model: &RiskModelSpec, rows: &mut Rows, curves: &mut Rows) {
    let mut entries = r.ratios.entries.iter();
    for run in &r.runs {
        let cols = ModelCols::of(model, "", run.horizon.kind_name());
        for (j, _) in run.estimates.iter().enumerate() {
            let e = entries.next().expect("one ratio entry per estimate");
            let mut row = ident.lead();
            row.extend([
                String::new(),
                opt(e.t),
                num(e.x),
                e.estimate.method.to_string(),
                num(e.estimate.p_hat),
                num(e.estimate.stderr),
                e.estimate.hits.to_string(),
                num(e.n_fbar),
                num(e.ratio),
                num(e.ci_lo),
                num(e.ci_hi),
                e.well_estimated.to_string(),
                r.ratios.verdict.to_string(),
                cols.functional.clone(),
                cols.q1.clone(),
                cols.q2.clone(),
                cols.c.clone(),
                cols.d.clone(),
                cols.tau_kind.clone(),
                num(run.lower[j].p_hat),
                num(run.upper[j].p_hat),
                run.sandwich_violations.to_string(),
            ]);
            rows.push(row);
            let series = e.t.map_or_else(|| run.horizon.to_string(), |t| format!("t={t}"));
            ident.curve(curves, &series, e.x, e.ratio, Some(e.estimate.stderr / e.n_fbar));
        }
    }
}

fn trend_rows(ident: &Ident, series: &str, t: &TrendReport, rows: &mut Rows, curves: &mut Rows) {
    for p in &t.points {
        let mut r = ident.lead();
        r.extend([
            series.to_string(),
            num(p.at),
            num(p.value),
            opt(p.stderr),
            p.conclusive.to_string(),
            t.verdict.to_string(),
        ]);
        rows.push(r);
        ident.curve(curves, series, p.at, p.value, p.stderr);
    }
}

/// Per-scenario rows and their contribution to the long-format curves.
fn scenario_rows(o: &ScenarioOutcome, report: &ScenarioReport, curves: &mut Rows) -> Rows {
    let cfg = &o.config;
    let ident = Ident {
        id: &cfg.id,
        kind: cfg.kind.name(),
        seed: cfg.seed,
        samples: cfg.samples.unwrap_or(0),
    };
    match report {
        ScenarioReport::DeviationScan { report } | ScenarioReport::RandomSumScan { report, .. } => {
            let mut rows = Rows::new(&SCAN_HEADER);
            scan_rows(&ident, report, &ModelCols::default(), &mut rows, curves);
            rows
        }
        ScenarioReport::ReinsuranceScan { report } => {
            let mut rows = Rows::new(&SCAN_HEADER);
            let model = cfg.risk.as_ref().expect("validated reinsurance config");
            let mut cols = ModelCols::of(model, report.functional.name(), "");
            if !report.theorem_available {
                cols.functional.push_str(" (heuristic, no theorem)");
            }
            scan_rows(&ident, &report.report, &cols, &mut rows, curves);
            rows
        }
        ScenarioReport::Ruin(r) | ScenarioReport::RandomTimeRuin(r) => {
            let mut rows = Rows::new(&SCAN_HEADER);
            ruin_rows(&ident, r, cfg.risk.as_ref().expect("validated ruin config"), &mut rows, curves);
            rows
        }
        ScenarioReport::Diagnostics(d) => {
            let mut rows = Rows::new(&TREND_HEADER);
            let ident = Ident {
                samples: d.sample_points.unwrap_or(0),
                ..ident
            };
            for c in &d.estimated.curves {
                let series = format!("tail_ratio y={}", c.y);
                for (x, v) in c.x_grid.iter().zip(&c.ratios) {
                    let mut r = ident.lead();
                    r.extend([series.clone(), num(*x), num(*v), String::new(), "true".into(), String::new()]);
                    rows.push(r);
                    ident.curve(curves, &series, *x, *v, None);
                }
            }
            if let Some(t) = &d.left_tail {
                trend_rows(&ident, "left_tail", t, &mut rows, curves);
            }
            rows
        }
        ScenarioReport::DominatingEstimate { estimates } => {
            let mut rows = Rows::new(&DOMINATING_HEADER);
            for e in estimates {
                for (side, cells) in [("upper", &e.upper), ("lower", &e.lower)] {
                    for (x, cell) in e.grid.iter().zip(cells) {
                        let thresholds = x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";");
                        let mut r = ident.lead();
                        r.extend([
                            e.n.to_string(),
                            side.to_string(),
                            thresholds,
                            opt(cell.as_ref().map(|c| c.ratio)),
                            opt(cell.as_ref().map(|c| c.stderr)),
                            opt(cell.as_ref().map(|c| c.joint)),
                            opt(cell.as_ref().map(|c| c.product)),
                            num(e.gu_hat),
                            num(e.gl_hat),
                            opt(e.certified.map(|c| c.0)),
                            e.growth_detected.to_string(),
                        ]);
                        rows.push(r);
                        if let Some(c) = cell {
                            ident.curve(curves, &format!("{side} n={}", e.n), x[0], c.ratio, Some(c.stderr));
                        }
                    }
                }
            }
            rows
        }
        ScenarioReport::ConditionCheck { outcome, .. } => {
            let mut rows = Rows::new(&TREND_HEADER);
            match outcome {
                ConditionOutcome::Counting(c) => {
                    for t in c.concentration.iter().chain(&c.truncated_moments) {
                        trend_rows(&ident, &t.label, t, &mut rows, curves);
                    }
                }
                ConditionOutcome::Trend(t) => trend_rows(&ident, &t.label, t, &mut rows, curves),
            }
            rows
        }
    }
}

#[derive(Serialize)]
struct SummaryEntry<'a> {
    id: &'a str,
    kind: &'a str,
    seed: u64,
    samples: Option<u64>,
    verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a ScenarioReport>,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    scenarios: Vec<SummaryEntry<'a>>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    id: &'a str,
    kind: &'a str,
    seed: u64,
    /// FNV-1a of the id, the scenario component of every substream key.
    scenario_hash: String,
    verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    #[serde(flatten)]
    run: &'a RunInfo,
    substream_derivation: &'static str,
    roles: BTreeMap<&'static str, u64>,
    scenarios: Vec<ManifestEntry<'a>>,
}

#[derive(Serialize)]
struct Timings<'a> {
    schema_version: u32,
    threads: usize,
    scenarios: Vec<(&'a str, f64)>,
}

const DERIVATION: &str = "ChaCha8 key = le64(seed) | le64(fnv1a64(scenario id)) | le64(role code) | le64(domain tag); \
     stream id = replication index; uniforms are (top 52 bits + 1/2) * 2^-52";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path.display(), e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path.display(), e))
}

/// Writes every output file into `out_dir` and returns their paths.
/// With no outcomes only the manifest is written.
pub fn emit_outputs(outcomes: &[ScenarioOutcome], info: &RunInfo, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display(), e))?;
    let mut written = Vec::new();
    let mut curves = Rows::new(&CURVE_HEADER);
    let mut entries = Vec::new();
    for o in outcomes {
        let mut files = Vec::new();
        if let Ok(report) = &o.result {
            let name = format!("{}.{}.csv", o.config.id, o.config.kind);
            let path = out_dir.join(&name);
            scenario_rows(o, report, &mut curves).write(&path)?;
            written.push(path);
            files.push(name);
        }
        entries.push(ManifestEntry {
            id: &o.config.id,
            kind: o.config.kind.name(),
            seed: o.config.seed,
            scenario_hash: format!("{:016x}", fnv1a64(o.config.id.as_bytes())),
            verdict: o.verdict(),
            error: o.result.as_ref().err().map(String::as_str),
            files,
        });
    }
    if !outcomes.is_empty() {
        let path = out_dir.join("ratio_curves.csv");
        curves.write(&path)?;
        written.push(path);
        let summary = Summary {
            schema_version: SCHEMA_VERSION,
            scenarios: outcomes
                .iter()
                .map(|o| SummaryEntry {
                    id: &o.config.id,
                    kind: o.config.kind.name(),
                    seed: o.config.seed,
                    samples: o.config.samples,
                    verdict: o.verdict(),
                    error: o.result.as_ref().err().map(String::as_str),
                    report: o.result.as_ref().ok(),
                })
                .collect(),
        };
        let path = out_dir.join("summary.json");
        write_json(&path, &summary)?;
        written.push(path);
        let timings = Timings {
            schema_version: SCHEMA_VERSION,
            threads: info.threads,
            scenarios: outcomes.iter().map(|o| (o.config.id.as_str(), o.wall_seconds)).collect(),
        };
        let path = out_dir.join("timings.json");
        write_json(&path, &timings)?;
        written.push(path);
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "wodlab",
        tool_version: env!("CARGO_PKG_VERSION"),
        run: info,
        substream_derivation: DERIVATION,
        roles: Role::ALL.iter().map(|r| (r.name(), r.code())).collect(),
        scenarios: entries,
    };
    let path = out_dir.join("manifest.json");
    write_json(&path, &manifest)?;
    written.push(path);
    Ok(written)
}
