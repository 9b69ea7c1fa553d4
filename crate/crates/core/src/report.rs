//! Pipeline orchestration and report rendering for the command line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::audit::{audit, AuditError, Finding, FindingKind, RuleId, Severity};
use crate::dsl::Registry;
use crate::extract::{extract_dir, ExtractError, ExtractionDiagnostic};
use crate::facts::{load_facts, FactsError, LibraryFacts};
use crate::partition::{partition, Partition};
use crate::tagdb::{TagDatabase, TagDbError};
use crate::upg::{build_upg, to_dot, Upg};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    SourceDir(PathBuf),
    FactsFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
    Dot,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Format, String> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "dot" => Ok(Format::Dot),
            _ => Err(format!("unknown format `{s}` (expected text, json or dot)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Input,
    /// Applied in order on top of the bundled database; later files win.
    pub tagdbs: Vec<PathBuf>,
    pub format: Format,
    pub disabled: BTreeSet<RuleId>,
    pub fail_on: Severity,
}

impl RunConfig {
    pub fn new(input: Input) -> RunConfig {
        RunConfig {
            input,
            tagdbs: Vec::new(),
            format: Format::Text,
            disabled: BTreeSet::new(),
            fail_on: Severity::Low,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("`{path}`: {source}")]
    Facts {
        path: PathBuf,
        #[source]
        source: FactsError,
    },
    #[error("`{path}`: {source}")]
    TagDb {
        path: PathBuf,
        #[source]
        source: TagDbError,
    },
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Audit(#[from] AuditError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnitStats {
    pub components: usize,
    pub basic_units: usize,
    /// Basic units with one, two and three nodes.
    pub basic_units_by_size: [usize; 3],
    pub audit_units: usize,
    pub histogram: BTreeMap<String, usize>,
}

impl UnitStats {
    pub fn of(p: &Partition) -> UnitStats {
        UnitStats {
            components: p.components,
            basic_units: p.basic_units.len(),
            basic_units_by_size: p.count_by_size(),
            audit_units: p.audit_units.len(),
            histogram: p.histogram(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub library: String,
    pub counts: BTreeMap<String, usize>,
    pub findings: Vec<Finding>,
    pub units: UnitStats,
    #[serde(skip)]
    pub upg: Upg,
}

impl Report {
    /// Exit status for CI: 1 if any finding reaches `fail_on`, else 0.
    pub fn exit_code(&self, fail_on: Severity) -> i32 {
        i32::from(self.findings.iter().any(|f| f.severity >= fail_on))
    }
}

/// Everything the pipeline produces before auditing.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub facts: LibraryFacts,
    pub diagnostics: Vec<ExtractionDiagnostic>,
    pub tagdb: TagDatabase,
    pub upg: Upg,
    pub partition: Partition,
}

fn read(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

pub fn load_tagdb(paths: &[PathBuf]) -> Result<TagDatabase, RunError> {
    let mut db = TagDatabase::bundled();
    for p in paths {
        let extra = TagDatabase::from_json(&read(p)?).map_err(|source| RunError::TagDb { path: p.clone(), source })?;
        db.merge(extra);
    }
    Ok(db)
}

pub fn analyze(input: &Input, tagdbs: &[PathBuf]) -> Result<Analysis, RunError> {
    let tagdb = load_tagdb(tagdbs)?;
    let (facts, diagnostics) = match input {
        Input::SourceDir(dir) => {
            let x = extract_dir(dir, &tagdb)?;
            (x.facts, x.diagnostics)
        }
        Input::FactsFile(path) => {
            let facts = load_facts(&read(path)?).map_err(|source| RunError::Facts { path: path.clone(), source })?;
            (facts, Vec::new())
        }
    };
    let upg = build_upg(&facts);
    let partition = partition(&upg, &facts);
    Ok(Analysis { facts, diagnostics, tagdb, upg, partition })
}

pub fn report_of(a: &Analysis, disabled: &BTreeSet<RuleId>) -> Result<Report, RunError> {
    let mut findings = audit(&a.facts, &a.upg, &a.partition, &a.tagdb, Registry::builtin())?;
    findings.retain(|f| !disabled.contains(&f.rule));
    let mut counts: BTreeMap<String, usize> = FindingKind::ALL.iter().map(|k| (k.as_str().to_string(), 0)).collect();
    for f in &findings {
        *counts.entry(f.kind.as_str().to_string()).or_default() += 1;
    }
    Ok(Report {
        library: a.facts.name.clone(),
        counts,
        findings,
        units: UnitStats::of(&a.partition),
        upg: a.upg.clone(),
    })
}

/// Full pipeline: extract or load, build the graph, partition and audit.
pub fn run(config: &RunConfig) -> Result<(Report, i32), RunError> {
    let a = analyze(&config.input, &config.tagdbs)?;
    let report = report_of(&a, &config.disabled)?;
    let code = report.exit_code(config.fail_on);
    Ok((report, code))
}

/// Canonical JSON: keys sorted, two-space indent, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => to_canonical_json(report),
        Format::Dot => to_dot(&report.upg),
        Format::Text => render_text(report),
    }
}

fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let u = &r.units;
    let _ = writeln!(out, "library {}", r.library);
    let [one, two, three] = u.basic_units_by_size;
    let _ = writeln!(
        out,
        "{} components, {} basic units ({one} one-node, {two} two-node, {three} three-node), {} audit units",
        u.components, u.basic_units, u.audit_units
    );
    for (pattern, n) in &u.histogram {
        let _ = writeln!(out, "  {pattern:<22} {n}");
    }
    for f in &r.findings {
        let _ = writeln!(out, "{f}");
    }
    let summary: Vec<String> = r.counts.iter().filter(|(_, n)| **n > 0).map(|(k, n)| format!("{k}: {n}")).collect();
    if summary.is_empty() {
        out.push_str("no findings\n");
    } else {
        let _ = writeln!(out, "{} findings ({})", r.findings.len(), summary.join(", "));
    }
    out
}
