use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{AriExpr, SpArg, SpExpr, SpTerm};
use super::registry::{placeholder, Registry};
use super::tagset::{Tag, TagSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("unknown tag `{0}`")]
    UnknownCompound(String),
    #[error("expansion of `{0}` does not terminate")]
    ExpansionDepth(String),
}

const MAX_DEPTH: usize = 16;

/// Replace every compound term by its definition. Negated compounds are
/// expanded with the negation pushed inward.
pub fn expand_compound(e: &SpExpr, reg: &Registry) -> Result<SpExpr, AlgebraError> {
    expand(e, reg, true, 0)
}

/// Like [`expand_compound`], but unknown tags are kept as primitives.
pub fn expand_lenient(e: &SpExpr, reg: &Registry) -> SpExpr {
    expand(e, reg, false, 0).unwrap_or_else(|_| e.clone())
}

fn expand(e: &SpExpr, reg: &Registry, strict: bool, depth: usize) -> Result<SpExpr, AlgebraError> {
    match e {
        SpExpr::Term(t) => {
            let Some(def) = reg.get(&t.tag) else {
                return if strict { Err(AlgebraError::UnknownCompound(t.tag.clone())) } else { Ok(e.clone()) };
            };
            let Some(template) = &def.expansion else {
                return Ok(e.clone());
            };
            if depth >= MAX_DEPTH {
                return Err(AlgebraError::ExpansionDepth(t.tag.clone()));
            }
            let bindings: BTreeMap<&str, &SpArg> =
                def.params.iter().map(String::as_str).zip(t.args.iter()).collect();
            let mut body = substitute(template, &bindings);
            if t.negated {
                body = negate(&body);
            }
            expand(&body, reg, strict, depth + 1)
        }
        SpExpr::And(xs) => Ok(SpExpr::and(xs.iter().map(|x| expand(x, reg, strict, depth)).collect::<Result<_, _>>()?)),
        SpExpr::Or(xs) => Ok(SpExpr::or(xs.iter().map(|x| expand(x, reg, strict, depth)).collect::<Result<_, _>>()?)),
    }
}

pub fn negate(e: &SpExpr) -> SpExpr {
    match e {
        SpExpr::Term(t) => SpExpr::Term(SpTerm { negated: !t.negated, ..t.clone() }),
        SpExpr::And(xs) => SpExpr::or(xs.iter().map(negate).collect()),
        SpExpr::Or(xs) => SpExpr::and(xs.iter().map(negate).collect()),
    }
}

fn substitute(e: &SpExpr, b: &BTreeMap<&str, &SpArg>) -> SpExpr {
    match e {
        SpExpr::Term(t) => SpExpr::Term(SpTerm {
            args: t.args.iter().map(|a| subst_arg(a, b)).collect(),
            ..t.clone()
        }),
        SpExpr::And(xs) => SpExpr::and(xs.iter().map(|x| substitute(x, b)).collect()),
        SpExpr::Or(xs) => SpExpr::or(xs.iter().map(|x| substitute(x, b)).collect()),
    }
}

/// `layout.align` with `layout := l` becomes `l.align`.
fn subst_name(name: &str, b: &BTreeMap<&str, &SpArg>) -> Option<String> {
    let (head, rest) = match name.find('.') {
        Some(i) => (&name[..i], &name[i..]),
        None => (name, ""),
    };
    b.get(head).map(|a| format!("{a}{rest}"))
}

fn subst_arg(a: &SpArg, b: &BTreeMap<&str, &SpArg>) -> SpArg {
    match a {
        SpArg::FnParId(n) | SpArg::TypePar(n) => match b.get(n.as_str()) {
            Some(actual) => (*actual).clone(),
            None => match subst_name(n, b) {
                Some(s) if n.contains('.') => SpArg::FnParId(s),
                _ => a.clone(),
            },
        },
        SpArg::Ari(x) => SpArg::Ari(subst_ari(x, b)),
        SpArg::AddrRange(xs) => SpArg::AddrRange(xs.iter().map(|x| subst_arg(x, b)).collect()),
        other => other.clone(),
    }
}

fn subst_ari(x: &AriExpr, b: &BTreeMap<&str, &SpArg>) -> AriExpr {
    match x {
        AriExpr::Var(v) => match b.get(v.as_str()) {
            Some(SpArg::Ari(inner)) => inner.clone(),
            Some(SpArg::RetVal) => AriExpr::Num("0".into()),
            _ => subst_name(v, b).map(AriExpr::Var).unwrap_or_else(|| x.clone()),
        },
        AriExpr::Bin(op, l, r) => AriExpr::Bin(op.clone(), Box::new(subst_ari(l, b)), Box::new(subst_ari(r, b))),
        AriExpr::Uni(op, l) => AriExpr::Uni(op.clone(), Box::new(subst_ari(l, b))),
        AriExpr::SizeOf(t) => AriExpr::SizeOf(subst_name(t, b).unwrap_or_else(|| t.clone())),
        AriExpr::Num(_) => x.clone(),
    }
}

/// Reflexive, plus every (closed) entry of the implication table whose
/// argument mapping reproduces `b`'s arguments from `a`'s.
pub fn implies(a: &SpTerm, b: &SpTerm, reg: &Registry) -> bool {
    let (a, b) = (&canonical_order(a), &canonical_order(b));
    if a.same_property(b) {
        return true;
    }
    let (from, to) = (a.polar_name(), b.polar_name());
    reg.implications().iter().filter(|i| i.from == from && i.to == to).any(|imp| {
        imp.map.len() == b.args.len()
            && imp.map.iter().zip(&b.args).all(|(m, actual)| match placeholder(m) {
                Some(i) => a.args.get(i).is_some_and(|x| x.to_string() == actual.to_string()),
                None => *m == actual.to_string(),
            })
    })
}

/// `Allocated(p, len, T, A)` is also seen in prose; reorder it to the
/// registry form `Allocated(p, T, len, A)` before unifying arguments.
pub fn canonical_order(t: &SpTerm) -> SpTerm {
    let mut t = t.clone();
    if t.tag == "Allocated"
        && t.args.len() >= 3
        && matches!(t.args[1], SpArg::FnParId(_) | SpArg::Ari(_))
        && matches!(t.args[2], SpArg::TypePar(_))
    {
        t.args.swap(1, 2);
    }
    t
}

/// Drop duplicates and terms implied by another term; sort by tag, then
/// polarity, then argument text.
pub fn normalize(terms: &[SpTerm], reg: &Registry) -> Vec<SpTerm> {
    let mut uniq: Vec<SpTerm> = Vec::new();
    for t in terms {
        if !uniq.iter().any(|u| u.same_property(t)) {
            uniq.push(t.clone());
        }
    }
    let mut out: Vec<SpTerm> = uniq
        .iter()
        .filter(|t| !uniq.iter().any(|u| !u.same_property(t) && implies(u, t, reg)))
        .cloned()
        .collect();
    out.sort_by_key(|t| (t.tag.clone(), t.negated, t.args_text()));
    out
}

fn tag_of(t: &SpTerm) -> Tag {
    Tag { name: t.tag.clone(), negated: t.negated }
}

/// Parameter-free projection: every tag occurring after compound expansion,
/// with Or branches unioned.
pub fn coarse(e: &SpExpr, reg: &Registry) -> TagSet {
    expand_lenient(e, reg).terms().into_iter().map(tag_of).collect()
}

pub fn coarse_all<'a>(es: impl IntoIterator<Item = &'a SpExpr>, reg: &Registry) -> TagSet {
    let mut out = TagSet::new();
    for e in es {
        out.extend(coarse(e, reg));
    }
    out
}

/// Tags required on every branch of the expanded expression.
pub fn unconditional(e: &SpExpr, reg: &Registry) -> TagSet {
    fn must(e: &SpExpr) -> TagSet {
        match e {
            SpExpr::Term(t) => std::iter::once(tag_of(t)).collect(),
            SpExpr::And(xs) => xs.iter().fold(TagSet::new(), |acc, x| acc.union(&must(x))),
            SpExpr::Or(xs) => {
                let mut it = xs.iter().map(must);
                let first = it.next().unwrap_or_default();
                it.fold(first, |acc, s| acc.intersection(&s))
            }
        }
    }
    must(&expand_lenient(e, reg))
}

pub fn unconditional_all<'a>(es: impl IntoIterator<Item = &'a SpExpr>, reg: &Registry) -> TagSet {
    let mut out = TagSet::new();
    for e in es {
        out.extend(unconditional(e, reg));
    }
    out
}

/// Close a coarse set under the implication table (ignoring arguments).
pub fn imply_close(s: &TagSet, reg: &Registry) -> TagSet {
    let mut out = s.clone();
    loop {
        let before = out.len();
        for imp in reg.implications() {
            if out.contains_name(&imp.from) {
                out.insert(Tag::from(imp.to.as_str()));
            }
        }
        if out.len() == before {
            return out;
        }
    }
}
