use std::fmt;

use serde::Serialize;

use super::ast::{SpArg, SpExpr, SpTerm};
use super::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LintSeverity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LintKind {
    UnknownTag,
    ArityMismatch { min: usize, max: usize, found: usize },
    UsageClass { declared: String, allowed: Vec<String> },
    ArgumentOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintDiagnostic {
    #[serde(flatten)]
    pub kind: LintKind,
    pub severity: LintSeverity,
    pub term: String,
    pub message: String,
}

impl LintDiagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == LintSeverity::Error
    }
}

impl fmt::Display for LintDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            LintSeverity::Warning => "warning",
            LintSeverity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.term, self.message)
    }
}

pub fn lint_sp(e: &SpExpr, reg: &Registry) -> Vec<LintDiagnostic> {
    e.terms().into_iter().flat_map(|t| lint_term(t, reg)).collect()
}

fn lint_term(t: &SpTerm, reg: &Registry) -> Vec<LintDiagnostic> {
    let text = t.to_string();
    let diag = |kind, severity, message: String| LintDiagnostic { kind, severity, term: text.clone(), message };
    let Some(def) = reg.get(&t.tag) else {
        return vec![diag(LintKind::UnknownTag, LintSeverity::Error, format!("unknown tag `{}`", t.tag))];
    };
    let mut out = Vec::new();
    let n = t.args.len();
    if !def.accepts_arity(n) {
        let expects = if def.min_arity == def.max_arity {
            def.max_arity.to_string()
        } else {
            format!("{} to {}", def.min_arity, def.max_arity)
        };
        out.push(diag(
            LintKind::ArityMismatch { min: def.min_arity, max: def.max_arity, found: n },
            LintSeverity::Error,
            format!("`{}` expects {expects} argument(s), found {n}; see {}", t.tag, def.signature()),
        ));
    }
    if let Some(u) = t.usage {
        if !def.usage.contains(&u) {
            let allowed: Vec<String> = def.usage.iter().map(|u| u.as_str().to_string()).collect();
            out.push(diag(
                LintKind::UsageClass { declared: u.as_str().into(), allowed: allowed.clone() },
                LintSeverity::Warning,
                format!("`{}` is used as {}, but its usage class is {}", t.tag, u.as_str(), allowed.join(", ")),
            ));
        }
    }
    // Allocated(p, T, len, A): a length before the type parameter is the
    // alternative order seen in prose; accept it but point it out.
    if t.tag == "Allocated" && n >= 3 {
        let len_like = matches!(t.args[1], SpArg::FnParId(_) | SpArg::Ari(_));
        if len_like && matches!(t.args[2], SpArg::TypePar(_)) {
            out.push(diag(
                LintKind::ArgumentOrder,
                LintSeverity::Warning,
                format!("arguments look swapped; expected {}", def.signature()),
            ));
        }
    }
    out
}
