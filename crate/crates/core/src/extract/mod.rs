//! Source-subset extractor: turns `.rs` files written in the supported
//! subset into [`LibraryFacts`]. See `GRAMMAR.md` for the accepted syntax.

mod body;
mod items;
mod lexer;
mod lower;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::dsl::parse_sp_list;
use crate::facts::{FactsError, FunctionId, LibraryFacts, ParamClass};
use crate::tagdb::TagDatabase;

pub use lower::classify_param_tokens;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: String,
    pub content: String,
}

impl SourceUnit {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        SourceUnit { path: path.into(), content: content.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticSeverity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ExtractionDiagnostic {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub severity: DiagnosticSeverity,
    pub message: String,
}

impl fmt::Display for ExtractionDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            DiagnosticSeverity::Error => "error",
            DiagnosticSeverity::Warning => "warning",
        };
        write!(f, "{}:{}:{}: {sev}: {}", self.path, self.line, self.column, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("{}", first_error(.0))]
    Parse(Vec<ExtractionDiagnostic>),
    #[error("extracted facts are inconsistent: {0}")]
    Facts(#[from] FactsError),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn first_error(diags: &[ExtractionDiagnostic]) -> String {
    let errors = diags.iter().filter(|d| d.severity == DiagnosticSeverity::Error);
    let shown: Vec<String> = errors.map(|d| d.to_string()).collect();
    shown.join("\n")
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub facts: LibraryFacts,
    pub diagnostics: Vec<ExtractionDiagnostic>,
}

/// Classify a parameter type written as source text.
pub fn classify_param(ty: &str) -> ParamClass {
    match lexer::tokenize(ty) {
        Ok(toks) => classify_param_tokens(&toks, &Default::default()),
        Err(_) => ParamClass::Other,
    }
}

/// Module path of a file relative to the crate root: `lib.rs` → ``,
/// `a/mod.rs` → `a`, `a/b.rs` → `a::b`.
pub fn module_path_of(path: &str) -> String {
    let trimmed = path.strip_suffix(".rs").unwrap_or(path);
    let mut segs: Vec<&str> = trimmed.split(['/', '\\']).filter(|s| !s.is_empty() && *s != ".").collect();
    if segs.first() == Some(&"src") {
        segs.remove(0);
    }
    if matches!(segs.last(), Some(&"lib") | Some(&"main") | Some(&"mod")) {
        segs.pop();
    }
    segs.join("::")
}

/// Split on commas outside any bracket.
fn split_list(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i32;
    for c in text.chars() {
        match c {
            '(' | '[' | '<' => depth += 1,
            ')' | ']' | '>' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

pub fn extract(name: &str, units: &[SourceUnit], tagdb: &TagDatabase) -> Result<Extraction, ExtractError> {
    let mut diags = Vec::new();
    let mut parsed = Vec::new();
    for unit in units {
        let err = |line, column, message| ExtractionDiagnostic {
            path: unit.path.clone(),
            line,
            column,
            severity: DiagnosticSeverity::Error,
            message,
        };
        let toks = match lexer::tokenize(&unit.content) {
            Ok(t) => t,
            Err(e) => {
                diags.push(err(e.line, e.column, e.message));
                continue;
            }
        };
        match items::parse_module(&toks, &module_path_of(&unit.path), &unit.path) {
            Ok(m) => parsed.push((unit.path.clone(), m)),
            Err(e) => diags.push(err(e.line, e.column, e.message)),
        }
    }

    let mut facts = LibraryFacts::empty(name);
    let mut all = Vec::new();
    for (_, m) in &parsed {
        flatten(m, &mut all);
    }
    let mut notes = Vec::new();
    let ix = lower::index(&all, &mut notes);
    facts.types = lower::lower_types(&all);
    facts.functions = ix.lower_functions(tagdb, &mut notes);
    for (id, file, docs) in ix.docs() {
        for doc in docs {
            collect_doc(&mut facts, id, doc, &mut diags, file);
        }
    }
    diags.extend(notes.into_iter().map(|n| ExtractionDiagnostic {
        path: n.path,
        line: n.line,
        column: n.column,
        severity: DiagnosticSeverity::Warning,
        message: n.message,
    }));
    diags.sort();
    diags.dedup();
    if diags.iter().any(|d| d.severity == DiagnosticSeverity::Error) {
        return Err(ExtractError::Parse(diags));
    }

    let mut facts = facts.finalize()?;
    facts.functions.sort_by(|a, b| a.id.cmp(&b.id));
    facts.types.sort_by(|a, b| a.id.cmp(&b.id));
    for t in &mut facts.types {
        t.constructors.sort();
    }
    let facts = facts.finalize()?;
    Ok(Extraction { facts, diagnostics: diags })
}

fn flatten<'a>(m: &'a items::RawModule, out: &mut Vec<&'a items::RawModule>) {
    out.push(m);
    for c in &m.children {
        flatten(c, out);
    }
}

fn collect_doc(
    facts: &mut LibraryFacts,
    id: &FunctionId,
    doc: &lexer::Token,
    diags: &mut Vec<ExtractionDiagnostic>,
    path: &str,
) {
    let text = doc.text.trim();
    if let Some(rest) = text.strip_prefix("SAFETY:") {
        match parse_sp_list(rest) {
            Ok(exprs) => {
                let entry = facts.annotations.entry(id.clone()).or_default();
                entry.extend(exprs.iter().map(|e| e.to_string()));
            }
            Err(e) => {
                // columns are relative to the annotation text; shift to the line
                let offset = doc.text.find(rest.trim_start()).unwrap_or(0) + 4;
                diags.push(ExtractionDiagnostic {
                    path: path.to_string(),
                    line: doc.line,
                    column: doc.column + offset + e.column - 1,
                    severity: DiagnosticSeverity::Error,
                    message: format!("in SAFETY annotation of `{id}`: {e}"),
                });
            }
        }
    } else if let Some(rest) = text.strip_prefix("VERIFIES:") {
        facts.verifies.entry(id.clone()).or_default().extend(split_list(rest));
    } else if let Some(rest) = text.strip_prefix("KILLS:") {
        facts.kills.entry(id.clone()).or_default().extend(split_list(rest));
    }
}

/// Extract every `.rs` file under `dir`. The library is named after the directory.
pub fn extract_dir(dir: &Path, tagdb: &TagDatabase) -> Result<Extraction, ExtractError> {
    let mut files = Vec::new();
    collect_rs(dir, dir, &mut files)?;
    files.sort();
    let mut units = Vec::new();
    for (rel, full) in files {
        let content = std::fs::read_to_string(&full).map_err(|source| ExtractError::Io { path: full.clone(), source })?;
        units.push(SourceUnit::new(rel, content));
    }
    let name = dir
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "library".to_string());
    extract(&name, &units, tagdb)
}

fn collect_rs(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<(), ExtractError> {
    let io = |source| ExtractError::Io { path: dir.to_path_buf(), source };
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            collect_rs(root, &path, out)?;
        } else if path.extension().is_some_and(|e| e == "rs") {
            let rel = path.strip_prefix(root).unwrap_or(&path).to_string_lossy().replace('\\', "/");
            out.push((rel, path));
        }
    }
    Ok(())
}
