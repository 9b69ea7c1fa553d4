//! Tag auditor: bottom checks, signature inference, delegation with
//! eliminations, and constructor consistency, all over coarse tag sets.

pub mod infer;
pub mod rules;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::dsl::algebra::{imply_close, unconditional_all};
use crate::dsl::{coarse_all, parse_sp, Registry, SpExpr, SyntaxError, Tag, TagSet};
use crate::facts::{AdtKind, FnKind, FunctionFact, FunctionId, LibraryFacts, ParamClass, RetClass};
use crate::partition::Partition;
use crate::tagdb::TagDatabase;
use crate::upg::Upg;

pub use infer::{infer_signature_tags, signature_rules, Inferred, SigView};
pub use rules::RuleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FindingKind {
    EmptyAnnotation,
    MissingTag,
    SuperfluousTag,
    ConstructorInconsistency,
    LiteralConstructorSoundness,
    UnresolvedExternal,
}

impl FindingKind {
    pub const ALL: [FindingKind; 6] = [
        FindingKind::EmptyAnnotation,
        FindingKind::MissingTag,
        FindingKind::SuperfluousTag,
        FindingKind::ConstructorInconsistency,
        FindingKind::LiteralConstructorSoundness,
        FindingKind::UnresolvedExternal,
    ];

    pub fn severity(self) -> Severity {
        match self {
            FindingKind::ConstructorInconsistency | FindingKind::LiteralConstructorSoundness => Severity::High,
            FindingKind::MissingTag | FindingKind::EmptyAnnotation => Severity::Medium,
            FindingKind::SuperfluousTag | FindingKind::UnresolvedExternal => Severity::Low,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::EmptyAnnotation => "EmptyAnnotation",
            FindingKind::MissingTag => "MissingTag",
            FindingKind::SuperfluousTag => "SuperfluousTag",
            FindingKind::ConstructorInconsistency => "ConstructorInconsistency",
            FindingKind::LiteralConstructorSoundness => "LiteralConstructorSoundness",
            FindingKind::UnresolvedExternal => "UnresolvedExternal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Severity, String> {
        match s {
            "low" => Ok(Severity::Low),
            "medium" => Ok(Severity::Medium),
            "high" => Ok(Severity::High),
            _ => Err(format!("unknown severity `{s}` (expected low, medium or high)")),
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Finding {
    pub subject: String,
    pub rule: RuleId,
    pub kind: FindingKind,
    pub tags: TagSet,
    pub evidence: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub severity: Severity,
}

impl Finding {
    fn new(kind: FindingKind, subject: impl Into<String>, rule: RuleId, tags: TagSet, evidence: String) -> Finding {
        Finding { subject: subject.into(), rule, kind, tags, evidence, unit: None, severity: kind.severity() }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.rule, self.subject, self.kind.as_str())?;
        if !self.tags.is_empty() {
            write!(f, " {}", self.tags)?;
        }
        write!(f, " ({})", self.evidence)
    }
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("{section} entry of `{id}`: {source}")]
    Syntax {
        section: &'static str,
        id: FunctionId,
        #[source]
        source: SyntaxError,
    },
}

/// Coarse views of a list of SP strings or bare tag names.
#[derive(Debug, Clone, Default)]
pub struct TagList {
    pub coarse: TagSet,
    pub unconditional: TagSet,
}

fn bare_tag(s: &str) -> Option<Tag> {
    let name = s.strip_prefix('!').unwrap_or(s);
    let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    ok.then(|| Tag::from(s))
}

/// Parse annotation-style entries. A bare compound name stands for the
/// compound with its formal parameters.
pub fn parse_tag_list(entries: &[String], reg: &Registry) -> Result<TagList, SyntaxError> {
    let mut exprs: Vec<SpExpr> = Vec::new();
    let mut bare = TagSet::new();
    for e in entries {
        let e = e.trim();
        match bare_tag(e) {
            Some(t) => match reg.get(&t.name).filter(|d| d.is_compound() && !t.negated) {
                Some(def) => exprs.push(parse_sp(&format!("{}({})", def.name, def.params.join(", ")))?),
                None => {
                    bare.insert(t);
                }
            },
            None => exprs.push(parse_sp(e)?),
        }
    }
    let mut coarse = coarse_all(&exprs, reg);
    let mut unconditional = unconditional_all(&exprs, reg);
    coarse.extend(bare.clone());
    unconditional.extend(bare);
    Ok(TagList { coarse, unconditional })
}

/// What one callee asks of its caller.
#[derive(Debug, Clone)]
struct Contribution {
    id: FunctionId,
    coarse: TagSet,
    unconditional: TagSet,
    unchecked: TagSet,
    name: String,
}

struct Ctx<'a> {
    facts: &'a LibraryFacts,
    tagdb: &'a TagDatabase,
    declared: BTreeMap<FunctionId, TagList>,
    verifies: BTreeMap<FunctionId, TagSet>,
    kills: BTreeMap<FunctionId, TagSet>,
    reg: &'a Registry,
}

impl<'a> Ctx<'a> {
    fn new(facts: &'a LibraryFacts, tagdb: &'a TagDatabase, reg: &'a Registry) -> Result<Ctx<'a>, AuditError> {
        let load = |section: &'static str, map: &BTreeMap<FunctionId, Vec<String>>| {
            map.iter()
                .map(|(id, v)| {
                    parse_tag_list(v, reg)
                        .map(|l| (id.clone(), l))
                        .map_err(|source| AuditError::Syntax { section, id: id.clone(), source })
                })
                .collect::<Result<BTreeMap<_, _>, _>>()
        };
        let declared = load("annotations", &facts.annotations)?;
        let verifies = load("verifies", &facts.verifies)?.into_iter().map(|(k, v)| (k, v.coarse)).collect();
        let kills = load("kills", &facts.kills)?.into_iter().map(|(k, v)| (k, v.coarse)).collect();
        Ok(Ctx { facts, tagdb, declared, verifies, kills, reg })
    }

    fn declared(&self, id: &FunctionId) -> TagList {
        self.declared.get(id).cloned().unwrap_or_default()
    }

    fn verifies(&self, id: &FunctionId) -> TagSet {
        self.verifies.get(id).cloned().unwrap_or_default()
    }

    /// RS of a local function: declared tags, or the signature-inferred ones
    /// when nothing is declared.
    fn required(&self, f: &FunctionFact) -> TagSet {
        let d = self.declared(&f.id);
        if d.coarse.is_empty() {
            infer_signature_tags(f)
        } else {
            d.coarse
        }
    }

    /// Declared annotation first, then the tag database, then signature inference.
    fn contribution(&self, id: &FunctionId) -> Option<Contribution> {
        let local = self.facts.function(id);
        let d = self.declared(id);
        let name = id.short_name().to_string();
        if local.is_some() && !d.coarse.is_empty() {
            let unchecked = local.map(|f| infer::unchecked_tags(&SigView::of_fn(f))).unwrap_or_default();
            let c = Contribution { id: id.clone(), coarse: d.coarse, unconditional: d.unconditional, unchecked, name };
            return Some(c);
        }
        if let Some(api) = self.tagdb.get(id).filter(|a| !a.exprs.is_empty()) {
            let c = Contribution {
                id: id.clone(),
                coarse: coarse_all(&api.exprs, self.reg),
                unconditional: unconditional_all(&api.exprs, self.reg),
                unchecked: infer::unchecked_tags(&SigView::of_external(api)),
                name,
            };
            return Some(c);
        }
        let f = local?;
        let tags = infer_signature_tags(f);
        let c = Contribution {
            id: id.clone(),
            coarse: tags.clone(),
            unconditional: tags,
            unchecked: infer::unchecked_tags(&SigView::of_fn(f)),
            name,
        };
        Some(c)
    }

    /// Tags the constructors of a method's owner jointly guarantee, minus
    /// whatever the mutating methods may invalidate.
    fn constructor_guarantee(&self, owner: &crate::facts::TypeId) -> TagSet {
        let mut ctors = self.facts.constructors_of(owner).into_iter();
        let cover = |c: &FunctionFact| {
            let mut s = imply_close(&self.declared(&c.id).coarse, self.reg);
            s.extend(self.verifies(&c.id));
            s
        };
        let Some(first) = ctors.next() else {
            return TagSet::new();
        };
        let mut acc = cover(first);
        for c in ctors {
            acc = acc.intersection(&cover(c));
        }
        for m in self.facts.mutating_methods_of(owner) {
            if let Some(k) = self.kills.get(&m) {
                acc = acc.difference(k);
            }
        }
        acc
    }
}

fn unit_index(p: &Partition) -> BTreeMap<FunctionId, String> {
    let mut out = BTreeMap::new();
    for u in &p.audit_units {
        if let Some(c) = &u.caller {
            out.insert(c.clone(), u.id.clone());
        }
    }
    for u in &p.audit_units {
        if u.caller.is_none() {
            for c in &u.callees {
                out.entry(c.clone()).or_insert_with(|| u.id.clone());
            }
        }
    }
    out
}

fn list(ids: &[&FunctionId]) -> String {
    ids.iter().map(|i| format!("`{i}`")).collect::<Vec<_>>().join(", ")
}

/// Run every rule over `facts` and return findings sorted by subject, rule and kind.
pub fn audit(
    facts: &LibraryFacts,
    g: &Upg,
    p: &Partition,
    tagdb: &TagDatabase,
    reg: &Registry,
) -> Result<Vec<Finding>, AuditError> {
    let ctx = Ctx::new(facts, tagdb, reg)?;
    let units = unit_index(p);
    let mut out = Vec::new();
    for f in facts.functions.iter().filter(|f| f.has_unsafe_marker()) {
        let mut found = audit_function(&ctx, g, f);
        for x in &mut found {
            x.unit = units.get(&f.id).cloned();
        }
        out.extend(found);
    }
    for t in &facts.types {
        out.extend(check_constructor_consistency(&ctx, t));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Bottom check: a public unsafe function must declare something.
pub fn check_bottom(f: &FunctionFact, declared: &TagSet) -> Option<Finding> {
    (f.is_public() && f.is_unsafe() && declared.is_empty()).then(|| {
        Finding::new(
            FindingKind::EmptyAnnotation,
            f.id.as_str(),
            RuleId::InferBottom,
            TagSet::new(),
            "pub unsafe fn with no declared tags".into(),
        )
    })
}

fn audit_function(ctx: &Ctx, g: &Upg, f: &FunctionFact) -> Vec<Finding> {
    let mut out = Vec::new();
    let declared = ctx.declared(&f.id);
    out.extend(check_bottom(f, &declared.coarse));
    let bottom = f.is_public() && f.is_unsafe() && declared.coarse.is_empty();

    let sig = signature_rules(&SigView::of_fn(f));
    let mut contribs = Vec::new();
    for callee in g.callees_of(&f.id) {
        match ctx.contribution(&callee.func) {
            Some(c) if !c.coarse.is_empty() => contribs.push(c),
            Some(_) if ctx.facts.is_local(&callee.func) => {}
            _ => out.push(Finding::new(
                FindingKind::UnresolvedExternal,
                f.id.as_str(),
                RuleId::InferDelegation,
                TagSet::new(),
                format!("no tags known for callee `{}`", callee.func),
            )),
        }
    }

    let mut delegated = TagSet::new();
    for c in &contribs {
        delegated.extend(c.coarse.clone());
    }
    let mut eliminated: Vec<(RuleId, TagSet, String)> = Vec::new();
    if f.ret.class == RetClass::OptionWrapped {
        for c in contribs.iter().filter(|c| c.name.contains("unchecked")) {
            let gone = delegated.intersection(&c.unchecked);
            if !gone.is_empty() {
                delegated = delegated.difference(&gone);
                let ev = format!("callee `{}` is unchecked; ret = option_wrapped", c.id);
                eliminated.push((RuleId::InferUncheckedOption, gone, ev));
            }
        }
    }
    let not_null = Tag::not("Null");
    if f.has_param(ParamClass::NonNullPointer) && delegated.contains(&not_null) {
        let from: Vec<&FunctionId> = contribs.iter().filter(|c| c.coarse.contains(&not_null)).map(|c| &c.id).collect();
        delegated.remove(&not_null);
        let ev = format!("params contain non_null_pointer; !Null required by {}", list(&from));
        eliminated.push((RuleId::InferNonNull, [not_null.clone()].into_iter().collect(), ev));
    }

    let mut suggested = delegated.clone();
    for i in &sig {
        suggested.extend(i.tags.clone());
    }
    let mut cover = imply_close(&declared.coarse, ctx.reg);
    cover.extend(ctx.verifies(&f.id));
    if f.kind == FnKind::DynMethod {
        if let Some(owner) = &f.owner_type {
            cover.extend(ctx.constructor_guarantee(owner));
        }
    }

    let missing = suggested.difference(&cover);
    if bottom && !missing.is_empty() {
        let rules: Vec<&str> = sig.iter().map(|i| i.rule.name()).collect();
        let ev = if rules.is_empty() {
            "pub unsafe fn with no declared tags; suggested by callees".to_string()
        } else {
            format!("pub unsafe fn with no declared tags; suggested by {}", rules.join(", "))
        };
        out.push(Finding::new(FindingKind::MissingTag, f.id.as_str(), RuleId::InferBottom, missing, ev));
    } else if !missing.is_empty() {
        let mut by_rule: BTreeMap<RuleId, TagSet> = BTreeMap::new();
        for t in missing.iter() {
            let rule = sig.iter().find(|i| i.tags.contains(t)).map(|i| i.rule).unwrap_or(RuleId::InferDelegation);
            by_rule.entry(rule).or_default().insert(t.clone());
        }
        for (rule, tags) in by_rule {
            let ev = match sig.iter().find(|i| i.rule == rule) {
                Some(i) => i.evidence.clone(),
                None => {
                    let from: Vec<&FunctionId> =
                        contribs.iter().filter(|c| c.coarse.iter().any(|t| tags.contains(t))).map(|c| &c.id).collect();
                    format!("required by callees {}", list(&from))
                }
            };
            out.push(Finding::new(FindingKind::MissingTag, f.id.as_str(), rule, tags, ev));
        }
    }

    if !contribs.is_empty() {
        let mut cond_only = TagSet::new();
        let mut uncond = TagSet::new();
        for c in &contribs {
            cond_only.extend(c.coarse.difference(&c.unconditional));
            uncond.extend(c.unconditional.clone());
        }
        let cond_closed = imply_close(&cond_only, ctx.reg);
        let sig_tags: TagSet = sig.iter().flat_map(|i| i.tags.clone()).collect();
        let mut flagged = TagSet::new();
        for t in declared.unconditional.iter() {
            if cond_closed.contains(t) && !uncond.contains(t) && !sig_tags.contains(t) {
                flagged.insert(t.clone());
            }
        }
        if !flagged.is_empty() {
            let from: Vec<&FunctionId> = contribs.iter().map(|c| &c.id).collect();
            let ev = format!("only conditionally required by callees {}", list(&from));
            out.push(Finding::new(FindingKind::SuperfluousTag, f.id.as_str(), RuleId::InferDelegation, flagged.clone(), ev));
        }
        for (rule, gone, ev) in eliminated {
            let extra: TagSet = gone
                .iter()
                .filter(|t| declared.unconditional.contains(t) && !suggested.contains(t) && !flagged.contains(t))
                .cloned()
                .collect();
            if !extra.is_empty() {
                out.push(Finding::new(FindingKind::SuperfluousTag, f.id.as_str(), rule, extra, ev));
            }
        }
    }
    out
}

/// Constructor consistency over one type, with the literal-enum and
/// raw-pointer-constructor credits.
fn check_constructor_consistency(ctx: &Ctx, t: &crate::facts::TypeFact) -> Vec<Finding> {
    let ctors = ctx.facts.constructors_of(&t.id);
    let mut out = Vec::new();
    if ctors.len() < 2 {
        return out;
    }
    for ci in ctors.iter().filter(|c| c.is_unsafe()) {
        let rs_i = ctx.required(ci);
        if rs_i.is_empty() {
            continue;
        }
        let raw_i = ci.has_param(ParamClass::RawPointer);
        let raw_tags = infer::raw_pointer_tags(&SigView::of_fn(ci));
        for cj in ctors.iter().filter(|c| c.id != ci.id) {
            let mut cover = if cj.is_unsafe() { imply_close(&ctx.required(cj), ctx.reg) } else { TagSet::new() };
            cover.extend(ctx.verifies(&cj.id));
            if raw_i && !cj.has_param(ParamClass::RawPointer) {
                cover.extend(raw_tags.clone());
            }
            let literal = cj.kind == FnKind::LiteralConstructor;
            if literal && t.adt_kind == AdtKind::Enum && ci.name.contains("unchecked") {
                cover.extend(rs_i.clone());
            }
            let gap = rs_i.difference(&cover);
            if gap.is_empty() {
                continue;
            }
            out.push(if literal {
                Finding::new(
                    FindingKind::LiteralConstructorSoundness,
                    t.id.as_str(),
                    RuleId::InferCtorConsistency,
                    gap,
                    format!("literal constructor bypasses the requirements of unsafe `{}`", ci.id),
                )
            } else {
                Finding::new(
                    FindingKind::ConstructorInconsistency,
                    cj.id.as_str(),
                    RuleId::InferCtorConsistency,
                    gap,
                    format!("does not cover the requirements of unsafe sibling `{}`", ci.id),
                )
            });
        }
    }
    out
}
