//! Signature- and name-based inference of required safety tags.

use crate::dsl::TagSet;
use crate::facts::{FunctionFact, ModuleClass, ParamClass, RetClass};
use crate::tagdb::ExternalApi;

use super::rules::RuleId;

pub const RAW2OWN: [&str; 5] = ["Align", "Allocated", "InBound", "Alias", "Owning"];
pub const RAW2REF: [&str; 4] = ["Align", "Allocated", "InBound", "Alias"];

/// The parts of a signature the inference rules look at.
#[derive(Debug, Clone)]
pub struct SigView<'a> {
    pub name: &'a str,
    pub is_unsafe: bool,
    pub params: Vec<ParamClass>,
    pub ret: RetClass,
    pub module_class: ModuleClass,
}

impl<'a> SigView<'a> {
    pub fn of_fn(f: &'a FunctionFact) -> SigView<'a> {
        SigView {
            name: &f.name,
            is_unsafe: f.is_unsafe(),
            params: f.params.iter().map(|p| p.class).collect(),
            ret: f.ret.class,
            module_class: f.module_class,
        }
    }

    pub fn of_external(api: &'a ExternalApi) -> SigView<'a> {
        SigView {
            name: api.name(),
            is_unsafe: true,
            params: api.entry.params.clone(),
            ret: api.entry.ret,
            module_class: api.entry.module_class,
        }
    }

    fn has(&self, c: ParamClass) -> bool {
        self.params.contains(&c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inferred {
    pub rule: RuleId,
    pub tags: TagSet,
    pub evidence: String,
}

fn name_hint(name: &str, needles: &[&str]) -> String {
    needles
        .iter()
        .find(|n| name.contains(*n))
        .map(|n| format!("; name contains \"{n}\""))
        .unwrap_or_default()
}

/// Rules 2 to 6, in firing order. Names only add evidence to rules 2 to 4;
/// the premises are the parameter and return classes.
pub fn signature_rules(sig: &SigView) -> Vec<Inferred> {
    let mut out = Vec::new();
    if !sig.is_unsafe {
        return out;
    }
    let raw = sig.has(ParamClass::RawPointer);
    if raw && sig.ret == RetClass::OwnedObject {
        out.push(Inferred {
            rule: RuleId::InferRaw2Own,
            tags: RAW2OWN.into_iter().collect(),
            evidence: format!("params contain raw_pointer; ret = owned_object{}", name_hint(sig.name, &["from_raw"])),
        });
    }
    if raw && sig.ret == RetClass::Reference {
        out.push(Inferred {
            rule: RuleId::InferRaw2Ref,
            tags: RAW2REF.into_iter().collect(),
            evidence: format!(
                "params contain raw_pointer; ret = reference{}",
                name_hint(sig.name, &["as_ref", "as_mut"])
            ),
        });
    }
    if raw && sig.has(ParamClass::Allocator) {
        out.push(Inferred {
            rule: RuleId::InferAllocator,
            tags: ["Allocator"].into_iter().collect(),
            evidence: format!("params contain raw_pointer and allocator{}", name_hint(sig.name, &["_in"])),
        });
    }
    let uck = unchecked_tags(sig);
    if !uck.is_empty() {
        let class = match sig.module_class {
            ModuleClass::Integer => "integer",
            ModuleClass::Str => "str",
            _ => "slice",
        };
        out.push(Inferred {
            rule: RuleId::InferUnchecked,
            tags: uck,
            evidence: format!("name `{}` contains \"unchecked\"; {class} module", sig.name),
        });
    }
    if sig.name.contains("assume_init") {
        out.push(Inferred {
            rule: RuleId::InferAssumeInit,
            tags: ["Init"].into_iter().collect(),
            evidence: format!("name `{}` contains \"assume_init\"", sig.name),
        });
    }
    out
}

/// Tags the unchecked rule attaches to `sig`, ignoring safety.
pub fn unchecked_tags(sig: &SigView) -> TagSet {
    if !sig.name.contains("unchecked") {
        return TagSet::new();
    }
    match sig.module_class {
        ModuleClass::Integer => ["ValidNum"].into_iter().collect(),
        ModuleClass::Str => ["ValidString"].into_iter().collect(),
        ModuleClass::Slice => ["InBound"].into_iter().collect(),
        ModuleClass::Other => TagSet::new(),
    }
}

/// Union of every signature rule that fires on `f`.
pub fn infer_signature_tags(f: &FunctionFact) -> TagSet {
    let mut out = TagSet::new();
    for i in signature_rules(&SigView::of_fn(f)) {
        out.extend(i.tags);
    }
    out
}

/// Tags a raw-pointer constructor owes to its raw pointer input: the
/// conclusions of rules 2 to 4 when they fire.
pub fn raw_pointer_tags(sig: &SigView) -> TagSet {
    let mut out = TagSet::new();
    for i in signature_rules(sig) {
        if matches!(i.rule, RuleId::InferRaw2Own | RuleId::InferRaw2Ref | RuleId::InferAllocator) {
            out.extend(i.tags);
        }
    }
    out
}
