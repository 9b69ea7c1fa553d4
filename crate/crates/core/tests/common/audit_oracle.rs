//! Reference auditor: every rule premise checked directly against the
//! facts, one function and one constructor pair at a time.

use std::collections::{BTreeMap, BTreeSet};

use sp_audit::dsl::{coarse, parse_sp, unconditional, Registry};
use sp_audit::facts::{AdtKind, Callee, FnKind, FunctionFact, LibraryFacts, ModuleClass, ParamClass, RetClass};
use sp_audit::tagdb::TagDatabase;

pub type Tags = BTreeSet<String>;
/// (subject, rule, kind) to the union of reported tags.
pub type Summary = BTreeMap<(String, String, String), Tags>;

fn tags<const N: usize>(xs: [&str; N]) -> Tags {
    xs.iter().map(|s| s.to_string()).collect()
}

fn close(s: &Tags) -> Tags {
    let mut out = s.clone();
    if out.contains("Init") {
        out.insert("Allocated".into());
    }
    if out.contains("Allocated") {
        out.insert("!Null".into());
    }
    out
}

fn sp_views(entries: &[String]) -> (Tags, Tags) {
    let reg = Registry::builtin();
    let (mut c, mut u) = (Tags::new(), Tags::new());
    for e in entries {
        let x = parse_sp(e).expect("generated annotations parse");
        c.extend(coarse(&x, reg).iter().map(|t| t.to_string()));
        u.extend(unconditional(&x, reg).iter().map(|t| t.to_string()));
    }
    (c, u)
}

fn names(entries: Option<&Vec<String>>) -> Tags {
    let mut out = Tags::new();
    for e in entries.into_iter().flatten() {
        if e == "Deref" {
            out.extend(tags(["Allocated", "InBound"]));
        } else {
            out.insert(e.clone());
        }
    }
    out
}

struct Sig {
    rules: Vec<(&'static str, Tags)>,
}

impl Sig {
    fn all(&self) -> Tags {
        self.rules.iter().flat_map(|(_, t)| t.iter().cloned()).collect()
    }
}

fn unchecked_of(name: &str, module: ModuleClass) -> Tags {
    if !name.contains("unchecked") {
        return Tags::new();
    }
    match module {
        ModuleClass::Integer => tags(["ValidNum"]),
        ModuleClass::Str => tags(["ValidString"]),
        ModuleClass::Slice => tags(["InBound"]),
        _ => Tags::new(),
    }
}

fn sig_of(is_unsafe: bool, name: &str, params: &[ParamClass], ret: RetClass, module: ModuleClass) -> Sig {
    let mut rules = Vec::new();
    if is_unsafe {
        let raw = params.contains(&ParamClass::RawPointer);
        if raw && ret == RetClass::OwnedObject {
            rules.push(("infer.raw2own", tags(["Align", "Allocated", "InBound", "Alias", "Owning"])));
        }
        if raw && ret == RetClass::Reference {
            rules.push(("infer.raw2ref", tags(["Align", "Allocated", "InBound", "Alias"])));
        }
        if raw && params.contains(&ParamClass::Allocator) {
            rules.push(("infer.allocator", tags(["Allocator"])));
        }
        let u = unchecked_of(name, module);
        if !u.is_empty() {
            rules.push(("infer.unchecked", u));
        }
        if name.contains("assume_init") {
            rules.push(("infer.assume_init", tags(["Init"])));
        }
    }
    Sig { rules }
}

fn sig_fn(f: &FunctionFact) -> Sig {
    let params: Vec<ParamClass> = f.params.iter().map(|p| p.class).collect();
    sig_of(f.is_unsafe(), &f.name, &params, f.ret.class, f.module_class)
}

struct Contrib {
    coarse: Tags,
    uncond: Tags,
    unchecked: Tags,
    name: String,
}

pub fn summarize(facts: &LibraryFacts, db: &TagDatabase) -> Summary {
    let reg = Registry::builtin();
    let mut out = Summary::new();
    let mut emit = |subject: &str, rule: &str, kind: &str, t: Tags| {
        out.entry((subject.to_string(), rule.to_string(), kind.to_string())).or_default().extend(t);
    };
    let declared = |id: &str| -> (Tags, Tags) {
        facts.annotations.iter().find(|(k, _)| k.as_str() == id).map(|(_, v)| sp_views(v)).unwrap_or_default()
    };
    let verifies = |id: &str| names(facts.verifies.iter().find(|(k, _)| k.as_str() == id).map(|(_, v)| v));
    let local = |id: &str| facts.functions.iter().find(|f| f.id.as_str() == id);
    let required = |f: &FunctionFact| {
        let d = declared(f.id.as_str()).0;
        if d.is_empty() {
            sig_fn(f).all()
        } else {
            d
        }
    };

    for f in facts.functions.iter().filter(|f| f.is_unsafe() || !f.unsafe_callsites.is_empty()) {
        let id = f.id.as_str();
        let (dc, du) = declared(id);
        let bottom = f.is_public() && f.is_unsafe() && dc.is_empty();
        if bottom {
            emit(id, "infer.bottom", "EmptyAnnotation", Tags::new());
        }
        let sig = sig_fn(f);

        let mut callee_ids = BTreeSet::new();
        for s in &f.unsafe_callsites {
            if let Callee::Direct(c) = &s.callee {
                match local(c.as_str()) {
                    Some(g) if !g.is_unsafe() => {}
                    _ => {
                        callee_ids.insert(c.to_string());
                    }
                }
            }
        }
        let mut contribs = Vec::new();
        for c in &callee_ids {
            let short = c.rsplit("::").next().unwrap().to_string();
            if let Some(g) = local(c) {
                let (gc, gu) = declared(c);
                let unchecked = unchecked_of(&g.name, g.module_class);
                if !gc.is_empty() {
                    contribs.push(Contrib { coarse: gc, uncond: gu, unchecked, name: short });
                    continue;
                }
            }
            if let Some(api) = db.get(&c.as_str().into()).filter(|a| !a.exprs.is_empty()) {
                let co = api.exprs.iter().flat_map(|e| coarse(e, reg).iter().map(|t| t.to_string()).collect::<Vec<_>>());
                let un = api.exprs.iter().flat_map(|e| unconditional(e, reg).iter().map(|t| t.to_string()).collect::<Vec<_>>());
                contribs.push(Contrib {
                    coarse: co.collect(),
                    uncond: un.collect(),
                    unchecked: unchecked_of(&short, api.entry.module_class),
                    name: short,
                });
                continue;
            }
            match local(c) {
                Some(g) => {
                    let t = sig_fn(g).all();
                    if !t.is_empty() {
                        let unchecked = unchecked_of(&g.name, g.module_class);
                        contribs.push(Contrib { coarse: t.clone(), uncond: t, unchecked, name: short });
                    }
                }
                None => emit(id, "infer.delegation", "UnresolvedExternal", Tags::new()),
            }
        }

        let mut delegated: Tags = contribs.iter().flat_map(|c| c.coarse.iter().cloned()).collect();
        let mut gone8 = Tags::new();
        if f.ret.class == RetClass::OptionWrapped {
            for c in contribs.iter().filter(|c| c.name.contains("unchecked")) {
                gone8.extend(delegated.intersection(&c.unchecked).cloned());
            }
            delegated = delegated.difference(&gone8).cloned().collect();
        }
        let mut gone9 = Tags::new();
        if f.has_param(ParamClass::NonNullPointer) && delegated.remove("!Null") {
            gone9.insert("!Null".to_string());
        }
        let sig_tags = sig.all();
        let suggested: Tags = delegated.union(&sig_tags).cloned().collect();

        let mut cover = close(&dc);
        cover.extend(verifies(id));
        if f.kind == FnKind::DynMethod {
            let ctors: Vec<&FunctionFact> = facts
                .functions
                .iter()
                .filter(|c| c.kind.is_constructor() && c.owner_type == f.owner_type)
                .collect();
            let mut guarantee: Option<Tags> = None;
            for c in ctors {
                let mut s = close(&declared(c.id.as_str()).0);
                s.extend(verifies(c.id.as_str()));
                guarantee = Some(match guarantee {
                    None => s,
                    Some(g) => g.intersection(&s).cloned().collect(),
                });
            }
            let mut guarantee = guarantee.unwrap_or_default();
            for m in facts.functions.iter().filter(|m| {
                m.kind == FnKind::DynMethod && m.owner_type == f.owner_type && m.takes_mut_self
            }) {
                if let Some((_, k)) = facts.kills.iter().find(|(k, _)| *k == &m.id) {
                    for t in names(Some(k)) {
                        guarantee.remove(&t);
                    }
                }
            }
            cover.extend(guarantee);
        }

        let missing: Tags = suggested.difference(&cover).cloned().collect();
        if bottom && !missing.is_empty() {
            emit(id, "infer.bottom", "MissingTag", missing);
        } else {
            for t in missing {
                let rule = sig.rules.iter().find(|(_, ts)| ts.contains(&t)).map(|(r, _)| *r).unwrap_or("infer.delegation");
                emit(id, rule, "MissingTag", tags([t.as_str()]));
            }
        }

        if !contribs.is_empty() {
            let mut cond = Tags::new();
            let mut uncond = Tags::new();
            for c in &contribs {
                cond.extend(c.coarse.difference(&c.uncond).cloned());
                uncond.extend(c.uncond.iter().cloned());
            }
            let cond = close(&cond);
            let flagged: Tags = du
                .iter()
                .filter(|t| cond.contains(*t) && !uncond.contains(*t) && !sig_tags.contains(*t))
                .cloned()
                .collect();
            if !flagged.is_empty() {
                emit(id, "infer.delegation", "SuperfluousTag", flagged.clone());
            }
            for (rule, gone) in [("infer.unchecked_option", &gone8), ("infer.nonnull", &gone9)] {
                let extra: Tags = gone
                    .iter()
                    .filter(|t| du.contains(*t) && !suggested.contains(*t) && !flagged.contains(*t))
                    .cloned()
                    .collect();
                if !extra.is_empty() {
                    emit(id, rule, "SuperfluousTag", extra);
                }
            }
        }
    }

    for t in &facts.types {
        let ctors: Vec<&FunctionFact> = t.constructors.iter().filter_map(|c| local(c.as_str())).collect();
        if ctors.len() < 2 {
            continue;
        }
        for ci in ctors.iter().filter(|c| c.is_unsafe()) {
            let rs_i = required(ci);
            if rs_i.is_empty() {
                continue;
            }
            let raw_credit: Tags = sig_fn(ci)
                .rules
                .iter()
                .filter(|(r, _)| ["infer.raw2own", "infer.raw2ref", "infer.allocator"].contains(r))
                .flat_map(|(_, ts)| ts.iter().cloned())
                .collect();
            for cj in ctors.iter().filter(|c| c.id != ci.id) {
                let mut cover = if cj.is_unsafe() { close(&required(cj)) } else { Tags::new() };
                cover.extend(verifies(cj.id.as_str()));
                if ci.has_param(ParamClass::RawPointer) && !cj.has_param(ParamClass::RawPointer) {
                    cover.extend(raw_credit.iter().cloned());
                }
                let literal = cj.kind == FnKind::LiteralConstructor;
                if literal && t.adt_kind == AdtKind::Enum && ci.name.contains("unchecked") {
                    cover.extend(rs_i.iter().cloned());
                }
                let gap: Tags = rs_i.difference(&cover).cloned().collect();
                if gap.is_empty() {
                    continue;
                }
                if literal {
                    emit(t.id.as_str(), "infer.ctor_consistency", "LiteralConstructorSoundness", gap);
                } else {
                    emit(cj.id.as_str(), "infer.ctor_consistency", "ConstructorInconsistency", gap);
                }
            }
        }
    }
    out
}

/// The same summary computed from pipeline findings.
pub fn summarize_findings(findings: &[sp_audit::audit::Finding]) -> Summary {
    let mut out = Summary::new();
    for f in findings {
        out.entry((f.subject.clone(), f.rule.name().to_string(), f.kind.as_str().to_string()))
            .or_default()
            .extend(f.tags.iter().map(|t| t.to_string()));
    }
    out
}
