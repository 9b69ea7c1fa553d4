//! Python bindings: the safety-property language, extraction and the audit.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use sp_audit::audit::{self, RuleId};
use sp_audit::dsl::{self, Registry, SpExpr};
use sp_audit::report::{self, Analysis, Input, RunError};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err(e: RunError) -> PyErr {
    match e {
        RunError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn parse(text: &str) -> PyResult<SpExpr> {
    dsl::parse_sp(text).map_err(value_err)
}

fn tag_names(tags: &dsl::TagSet) -> Vec<String> {
    tags.iter().map(|t| t.to_string()).collect()
}

/// Canonical text of a safety-property expression.
#[pyfunction]
fn canonical(text: &str) -> PyResult<String> {
    Ok(parse(text)?.to_string())
}

/// Tag names after compound expansion, with polarity, ignoring arguments.
#[pyfunction]
fn coarse(text: &str) -> PyResult<Vec<String>> {
    Ok(tag_names(&dsl::coarse(&parse(text)?, Registry::builtin())))
}

/// Terms of a conjunction with duplicates and implied terms removed.
#[pyfunction]
fn normalize(text: &str) -> PyResult<Vec<String>> {
    let e = parse(text)?;
    let terms: Vec<_> = e.terms().into_iter().cloned().collect();
    Ok(dsl::normalize(&terms, Registry::builtin()).into_iter().map(|t| SpExpr::Term(t).to_string()).collect())
}

#[pyfunction]
fn expand(text: &str) -> PyResult<String> {
    let e = dsl::expand_compound(&parse(text)?, Registry::builtin()).map_err(value_err)?;
    Ok(e.to_string())
}

/// Lint messages for one expression; a syntax error raises `ValueError`.
#[pyfunction]
fn lint(text: &str) -> PyResult<Vec<String>> {
    Ok(dsl::lint_sp(&parse(text)?, Registry::builtin()).iter().map(|d| d.to_string()).collect())
}

/// Extract facts from a source directory and return them as JSON text.
#[pyfunction]
#[pyo3(signature = (src, tagdb = Vec::new()))]
fn extract(src: PathBuf, tagdb: Vec<PathBuf>) -> PyResult<String> {
    let db = report::load_tagdb(&tagdb).map_err(run_err)?;
    let x = sp_audit::extract::extract_dir(&src, &db).map_err(value_err)?;
    Ok(x.facts.to_json())
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "sp_audit")]
#[derive(Clone)]
struct Finding {
    subject: String,
    rule: String,
    kind: String,
    tags: Vec<String>,
    evidence: String,
    unit: Option<String>,
    severity: String,
}

#[pymethods]
impl Finding {
    fn __repr__(&self) -> String {
        format!("Finding({} {} {} {:?})", self.rule, self.subject, self.kind, self.tags)
    }
}

impl From<&audit::Finding> for Finding {
    fn from(f: &audit::Finding) -> Finding {
        Finding {
            subject: f.subject.clone(),
            rule: f.rule.name().to_string(),
            kind: f.kind.as_str().to_string(),
            tags: tag_names(&f.tags),
            evidence: f.evidence.clone(),
            unit: f.unit.clone(),
            severity: f.severity.to_string(),
        }
    }
}

#[pyclass(frozen, module = "sp_audit")]
struct Report {
    inner: report::Report,
}

#[pymethods]
impl Report {
    #[getter]
    fn library(&self) -> String {
        self.inner.library.clone()
    }

    #[getter]
    fn findings(&self) -> Vec<Finding> {
        self.inner.findings.iter().map(Finding::from).collect()
    }

    #[getter]
    fn counts(&self) -> BTreeMap<String, usize> {
        self.inner.counts.clone()
    }

    /// Basic units with one, two and three nodes.
    #[getter]
    fn unit_sizes(&self) -> [usize; 3] {
        self.inner.units.basic_units_by_size
    }

    #[getter]
    fn audit_units(&self) -> usize {
        self.inner.units.audit_units
    }

    fn to_json(&self) -> String {
        report::render(&self.inner, report::Format::Json)
    }

    fn to_text(&self) -> String {
        report::render(&self.inner, report::Format::Text)
    }

    #[pyo3(signature = (fail_on = "low"))]
    fn exit_code(&self, fail_on: &str) -> PyResult<i32> {
        Ok(self.inner.exit_code(fail_on.parse().map_err(PyValueError::new_err)?))
    }

    fn __len__(&self) -> usize {
        self.inner.findings.len()
    }
}

fn disabled_rules(names: &[String]) -> PyResult<BTreeSet<RuleId>> {
    names.iter().map(|n| n.parse::<RuleId>().map_err(value_err)).collect()
}

/// Audit a source directory or a facts file.
#[pyfunction]
#[pyo3(signature = (path, tagdb = Vec::new(), disable = Vec::new()))]
fn check(path: PathBuf, tagdb: Vec<PathBuf>, disable: Vec<String>) -> PyResult<Report> {
    let input = if path.is_dir() { Input::SourceDir(path) } else { Input::FactsFile(path) };
    let a = report::analyze(&input, &tagdb).map_err(run_err)?;
    let inner = report::report_of(&a, &disabled_rules(&disable)?).map_err(run_err)?;
    Ok(Report { inner })
}

/// Audit facts given as JSON text.
#[pyfunction]
#[pyo3(signature = (facts_json, disable = Vec::new()))]
fn check_facts(facts_json: &str, disable: Vec<String>) -> PyResult<Report> {
    let facts = sp_audit::facts::load_facts(facts_json).map_err(value_err)?;
    let upg = sp_audit::upg::build_upg(&facts);
    let partition = sp_audit::partition::partition(&upg, &facts);
    let tagdb = sp_audit::tagdb::TagDatabase::bundled();
    let a = Analysis { facts, diagnostics: Vec::new(), tagdb, upg, partition };
    let inner = report::report_of(&a, &disabled_rules(&disable)?).map_err(run_err)?;
    Ok(Report { inner })
}

#[pyfunction]
fn explain(rule: &str) -> PyResult<String> {
    let r: RuleId = rule.parse().map_err(value_err)?;
    Ok(format!("{}: {}\n  {}", r.name(), r.title(), r.explain()))
}

#[pymodule(name = "sp_audit")]
mod sp_audit_module {
    #[pymodule_export]
    use super::{canonical, check, check_facts, coarse, expand, explain, extract, lint, normalize, Finding, Report};
}
