//! Lowers parsed modules to facts: name resolution, classification and
//! call-site recording.

use std::collections::{BTreeMap, BTreeSet};

use super::body::{scan_body, Event, Receiver};
use super::items::{bound_names, type_text, AdtShape, RawFn, RawModule, SelfKind};
use super::lexer::{TokKind, Token};
use crate::facts::{
    AdtKind, CallSiteFact, Callee, FieldFact, FnKind, FunctionFact, FunctionId, ModuleClass, ParamClass, ParamFact,
    RetClass, RetFact, Safety, TypeFact, TypeId, Visibility,
};
use crate::tagdb::TagDatabase;

const INTEGERS: &[&str] = &[
    "u8", "u16", "u32", "u64", "u128", "usize", "i8", "i16", "i32", "i64", "i128", "isize",
];

pub(super) struct Note {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A function together with the module and impl context it was declared in.
struct Decl<'a> {
    module: &'a RawModule,
    owner: Option<String>,
    trait_name: Option<String>,
    raw: &'a RawFn,
    id: FunctionId,
}

struct MethodInfo {
    id: FunctionId,
    unsafe_: bool,
}

/// Everything declared locally, indexed for resolution.
pub(super) struct Index<'a> {
    decls: Vec<Decl<'a>>,
    types: BTreeSet<String>,
    free: BTreeMap<FunctionId, bool>,
    methods: BTreeMap<String, BTreeMap<String, MethodInfo>>,
    /// trait name → implementing (method name, fn id, unsafe).
    trait_impls: BTreeMap<String, Vec<(String, FunctionId, bool)>>,
}

fn join(base: &str, name: &str) -> String {
    if base.is_empty() {
        name.to_string()
    } else {
        format!("{base}::{name}")
    }
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_uppercase())
}

pub(super) fn index<'a>(modules: &[&'a RawModule], notes: &mut Vec<Note>) -> Index<'a> {
    let mut ix = Index {
        decls: Vec::new(),
        types: BTreeSet::new(),
        free: BTreeMap::new(),
        methods: BTreeMap::new(),
        trait_impls: BTreeMap::new(),
    };
    for m in modules {
        ix.types.extend(m.adts.iter().map(|a| a.name.clone()));
    }
    for m in modules {
        for f in &m.fns {
            let id = FunctionId::new(join(&m.path, &f.name));
            ix.free.insert(id.clone(), f.is_unsafe);
            ix.decls.push(Decl { module: m, owner: None, trait_name: None, raw: f, id });
        }
        for imp in &m.impls {
            if !ix.types.contains(&imp.type_name) {
                notes.push(Note {
                    path: m.file.clone(),
                    line: imp.line,
                    column: imp.column,
                    message: format!("impl for non-local type `{}` skipped", imp.type_name),
                });
                continue;
            }
            for f in &imp.fns {
                let id = FunctionId::new(format!("{}::{}", imp.type_name, f.name));
                ix.methods
                    .entry(imp.type_name.clone())
                    .or_default()
                    .insert(f.name.clone(), MethodInfo { id: id.clone(), unsafe_: f.is_unsafe });
                if let Some(tr) = &imp.trait_name {
                    ix.trait_impls.entry(tr.clone()).or_default().push((f.name.clone(), id.clone(), f.is_unsafe));
                }
                ix.decls.push(Decl {
                    module: m,
                    owner: Some(imp.type_name.clone()),
                    trait_name: imp.trait_name.clone(),
                    raw: f,
                    id,
                });
            }
        }
    }
    ix
}

/// Strip references, mutability and lifetimes, then take the last path
/// segment before any generic arguments: `&'a mut core::pin::Pin<P>` → `Pin`.
fn head_type(toks: &[Token]) -> Option<String> {
    let mut name = None;
    for t in toks {
        if t.is("&") || t.is("mut") || t.is("dyn") || t.kind == TokKind::Lifetime {
            continue;
        }
        if t.is_ident() {
            name = Some(t.text.clone());
        } else if !t.is("::") {
            break;
        }
    }
    name
}

pub fn classify_param_tokens(toks: &[Token], bounds: &BTreeMap<String, Vec<String>>) -> ParamClass {
    let Some(first) = toks.iter().find(|t| t.kind != TokKind::Lifetime) else {
        return ParamClass::Other;
    };
    if first.is("*") {
        return ParamClass::RawPointer;
    }
    if first.is("&") {
        let mutable = toks.iter().skip(1).find(|t| t.kind != TokKind::Lifetime).is_some_and(|t| t.is("mut"));
        return if mutable { ParamClass::MutableReference } else { ParamClass::Reference };
    }
    if first.is("impl") {
        let names = bound_names(&toks[1..]);
        return if names.iter().any(|n| n == "Allocator") { ParamClass::Allocator } else { ParamClass::Other };
    }
    let Some(head) = head_type(toks) else {
        return ParamClass::Other;
    };
    if head == "NonNull" {
        return ParamClass::NonNullPointer;
    }
    if head == "Allocator" || bounds.get(&head).is_some_and(|b| b.iter().any(|n| n == "Allocator")) {
        return ParamClass::Allocator;
    }
    if INTEGERS.contains(&head.as_str()) {
        return ParamClass::Integer;
    }
    if bounds.contains_key(&head) || !starts_upper(&head) {
        return ParamClass::Other;
    }
    ParamClass::OwnedObject
}

fn ret_fact(ret: Option<&[Token]>, owner: Option<&str>, types: &BTreeSet<String>) -> RetFact {
    let Some(toks) = ret.filter(|t| !t.is_empty()) else {
        return RetFact { class: RetClass::Unit, of_type: None };
    };
    if toks.len() == 2 && toks[0].is("(") && toks[1].is(")") {
        return RetFact { class: RetClass::Unit, of_type: None };
    }
    let local = |name: &str| -> Option<TypeId> {
        let name = if name == "Self" { owner? } else { name };
        types.contains(name).then(|| TypeId::new(name))
    };
    if toks[0].is("&") {
        let of_type = head_type(toks).and_then(|h| local(&h));
        return RetFact { class: RetClass::Reference, of_type };
    }
    if toks[0].is("*") || toks[0].is("(") || toks[0].is("[") {
        return RetFact { class: RetClass::Other, of_type: None };
    }
    let Some(head) = head_type(toks) else {
        return RetFact { class: RetClass::Other, of_type: None };
    };
    if head == "Option" {
        return RetFact { class: RetClass::OptionWrapped, of_type: None };
    }
    if head == "Self" || starts_upper(&head) {
        return RetFact { class: RetClass::OwnedObject, of_type: local(&head) };
    }
    RetFact { class: RetClass::Other, of_type: None }
}

/// `fn(T, U) -> R`, prefixed with `unsafe ` for unsafe functions.
fn signature_of(f: &RawFn) -> String {
    let params: Vec<String> = f.params.iter().map(|(_, ty)| type_text(ty)).collect();
    let mut s = format!("{}fn({})", if f.is_unsafe { "unsafe " } else { "" }, params.join(", "));
    if let Some(ret) = &f.ret {
        let r = type_text(ret);
        if !r.is_empty() && r != "()" {
            s.push_str(" -> ");
            s.push_str(&r);
        }
    }
    s
}

/// The callable signature of a parameter type, if it is a function pointer,
/// a closure-trait generic or an `impl Fn(..)`.
fn param_signature(ty: &[Token], bounds: &BTreeMap<String, Vec<String>>) -> Option<String> {
    let text = type_text(ty);
    if text.starts_with("fn(") || text.starts_with("unsafe fn(") {
        return Some(text);
    }
    if ty.first().is_some_and(|t| t.is("impl")) {
        return bound_names(&ty[1..]).into_iter().find(|b| b.starts_with("fn("));
    }
    let head = head_type(ty)?;
    bounds.get(&head)?.iter().find(|b| b.starts_with("fn(")).cloned()
}

pub(super) fn lower_types(modules: &[&RawModule]) -> Vec<TypeFact> {
    let mut out = Vec::new();
    for m in modules {
        for a in &m.adts {
            let adt_kind = match a.shape {
                AdtShape::Struct => AdtKind::Struct,
                AdtShape::Enum => AdtKind::Enum,
                AdtShape::Union => AdtKind::Union,
            };
            let fields = a
                .fields
                .iter()
                .map(|(name, is_pub, ty)| FieldFact {
                    name: name.clone(),
                    visibility: if *is_pub { Visibility::Public } else { Visibility::Private },
                    class: classify_param_tokens(ty, &a.bounds),
                })
                .collect();
            out.push(TypeFact {
                id: TypeId::new(a.name.clone()),
                name: a.name.clone(),
                adt_kind,
                fields,
                constructors: Vec::new(),
            });
        }
    }
    out
}

impl<'a> Index<'a> {
    pub(super) fn lower_functions(&self, tagdb: &TagDatabase, notes: &mut Vec<Note>) -> Vec<FunctionFact> {
        self.decls.iter().map(|d| self.lower_fn(d, tagdb, notes)).collect()
    }

    fn lower_fn(&self, d: &Decl<'a>, tagdb: &TagDatabase, notes: &mut Vec<Note>) -> FunctionFact {
        let f = d.raw;
        let ret = ret_fact(f.ret.as_deref(), d.owner.as_deref(), &self.types);
        let kind = match (&d.owner, f.self_kind) {
            (None, _) => FnKind::Function,
            (Some(_), Some(_)) => FnKind::DynMethod,
            (Some(o), None) if ret.class == RetClass::OwnedObject && ret.of_type.as_ref().map(|t| t.as_str()) == Some(o) => {
                FnKind::Constructor
            }
            (Some(_), None) => FnKind::StaticMethod,
        };
        let params = f
            .params
            .iter()
            .map(|(name, ty)| ParamFact { name: name.clone(), class: classify_param_tokens(ty, &f.bounds) })
            .collect();
        let mut sites = Vec::new();
        if let Some(body) = &f.body {
            let scan = scan_body(body, f.is_unsafe);
            for site in &scan.sites {
                let resolved = match &site.event {
                    Event::Deref => Some((Callee::Direct(FunctionId::deref()), true)),
                    Event::Call { path } => self.resolve_path(d, path, tagdb),
                    Event::Method { name, receiver } => self.resolve_method(d, name, receiver, &scan.bindings, tagdb),
                };
                match resolved {
                    Some((callee, true)) if site.in_unsafe => sites.push(CallSiteFact { callee }),
                    // method names resolved through the tag database are too
                    // loose to warn about
                    Some((Callee::Direct(id), true))
                        if !site.in_unsafe && (matches!(site.event, Event::Call { .. }) || self.is_local_fn(&id)) =>
                    {
                        notes.push(Note {
                            path: d.module.file.clone(),
                            line: site.line,
                            column: site.column,
                            message: format!("call to unsafe `{id}` outside an unsafe block in `{}`; not recorded", d.id),
                        });
                    }
                    None if site.in_unsafe => {
                        if let Event::Call { path } = &site.event {
                            notes.push(Note {
                                path: d.module.file.clone(),
                                line: site.line,
                                column: site.column,
                                message: format!("unresolved call `{}` in unsafe context of `{}`; not recorded", path.join("::"), d.id),
                            });
                        }
                    }
                    _ => {}
                }
            }
        }
        sites.sort();
        sites.dedup();
        FunctionFact {
            id: d.id.clone(),
            name: f.name.clone(),
            path: d.module.path.clone(),
            kind,
            safety: if f.is_unsafe { Safety::Unsafe } else { Safety::Safe },
            visibility: if f.is_pub { Visibility::Public } else { Visibility::Private },
            owner_type: d.owner.as_ref().map(|o| TypeId::new(o.clone())),
            takes_mut_self: f.self_kind == Some(SelfKind::RefMut),
            params,
            ret,
            module_class: ModuleClass::from_module_path(&d.module.path),
            unsafe_callsites: sites,
            signature: f.self_kind.is_none().then(|| signature_of(f)),
            trait_impl: d.trait_name.clone(),
        }
    }

    fn is_local_fn(&self, id: &FunctionId) -> bool {
        self.decls.iter().any(|d| &d.id == id)
    }

    fn method_of(&self, ty: &str, name: &str) -> Option<(Callee, bool)> {
        let m = self.methods.get(ty)?.get(name)?;
        Some((Callee::Direct(m.id.clone()), m.unsafe_))
    }

    /// Resolves a path call. The flag reports whether the callee is unsafe;
    /// external callees from the tag database count as unsafe.
    fn resolve_path(&self, d: &Decl<'a>, path: &[String], tagdb: &TagDatabase) -> Option<(Callee, bool)> {
        let f = d.raw;
        if let [name] = path {
            if let Some((_, ty)) = f.params.iter().find(|(p, _)| p == name) {
                return param_signature(ty, &f.bounds).map(|s| (Callee::FnParam(s), true));
            }
            let local = FunctionId::new(join(&d.module.path, name));
            if let Some(&u) = self.free.get(&local) {
                return Some((Callee::Direct(local), u));
            }
            let imported = d.module.uses.get(name)?;
            return self.resolve_qualified(d, imported.clone(), tagdb);
        }
        self.resolve_qualified(d, path.to_vec(), tagdb)
    }

    fn resolve_qualified(&self, d: &Decl<'a>, mut segs: Vec<String>, tagdb: &TagDatabase) -> Option<(Callee, bool)> {
        while segs.first().is_some_and(|s| s == "crate" || s == "self" || s == "super") {
            segs.remove(0);
        }
        if segs.first().is_some_and(|s| s == "Self") {
            segs[0] = d.owner.clone()?;
        } else if let Some(full) = segs.first().and_then(|s| d.module.uses.get(s)) {
            let mut expanded = full.clone();
            expanded.extend(segs.drain(1..));
            segs = expanded;
            while segs.first().is_some_and(|s| s == "crate" || s == "self" || s == "super") {
                segs.remove(0);
            }
        }
        let n = segs.len();
        if n >= 2 && self.types.contains(&segs[n - 2]) {
            return self.method_of(&segs[n - 2], &segs[n - 1]);
        }
        let joined = segs.join("::");
        for candidate in [joined.clone(), join(&d.module.path, &joined)] {
            let id = FunctionId::new(candidate);
            if let Some(&u) = self.free.get(&id) {
                return Some((Callee::Direct(id), u));
            }
        }
        let best = tagdb
            .ids()
            .filter(|k| joined == k.as_str() || joined.ends_with(&format!("::{}", k.as_str())))
            .max_by_key(|k| k.as_str().len())?;
        Some((Callee::Direct(best.clone()), true))
    }

    fn resolve_method(
        &self,
        d: &Decl<'a>,
        name: &str,
        receiver: &Receiver,
        bindings: &BTreeMap<String, String>,
        tagdb: &TagDatabase,
    ) -> Option<(Callee, bool)> {
        let f = d.raw;
        match receiver {
            Receiver::SelfValue => {
                if let Some(r) = d.owner.as_deref().and_then(|o| self.method_of(o, name)) {
                    return Some(r);
                }
            }
            Receiver::Var(v) => {
                let param_ty = f.params.iter().find(|(p, _)| p == v).map(|(_, ty)| ty);
                if let Some(ty) = param_ty {
                    let bounds: Vec<String> = if ty.first().is_some_and(|t| t.is("impl")) {
                        bound_names(&ty[1..])
                    } else {
                        head_type(ty).and_then(|h| f.bounds.get(&h).cloned()).unwrap_or_default()
                    };
                    if !bounds.is_empty() {
                        return self.generic_call(&bounds, name);
                    }
                }
                let ty = param_ty.and_then(|t| head_type(t)).or_else(|| bindings.get(v).cloned());
                let ty = match ty.as_deref() {
                    Some("Self") => d.owner.clone(),
                    _ => ty,
                };
                if let Some(r) = ty.and_then(|t| self.method_of(&t, name)) {
                    return Some(r);
                }
            }
            Receiver::Other => {}
        }
        let mut hits = self.methods.values().filter_map(|ms| ms.get(name));
        if let (Some(m), None) = (hits.next(), hits.next()) {
            return Some((Callee::Direct(m.id.clone()), m.unsafe_));
        }
        tagdb.resolve_method(name).map(|id| (Callee::Direct(id.clone()), true))
    }

    /// A method call on a generic receiver. The trait is the first bound
    /// with a local implementation of the method, else the first bound.
    fn generic_call(&self, bounds: &[String], method: &str) -> Option<(Callee, bool)> {
        let traits: Vec<&String> = bounds.iter().filter(|b| !b.starts_with("fn(")).collect();
        let implemented = traits.iter().find(|t| {
            self.trait_impls.get(t.as_str()).is_some_and(|impls| impls.iter().any(|(m, _, _)| m == method))
        });
        let trait_name = implemented.or(traits.first())?;
        let unsafe_ = self
            .trait_impls
            .get(trait_name.as_str())
            .is_some_and(|impls| impls.iter().any(|(m, _, u)| m == method && *u));
        Some((Callee::GenericTraitMethod { trait_name: trait_name.to_string(), method: method.to_string() }, unsafe_))
    }

    pub(super) fn docs(&self) -> impl Iterator<Item = (&FunctionId, &str, &[Token])> {
        self.decls.iter().map(|d| (&d.id, d.module.file.as_str(), d.raw.docs.as_slice()))
    }
}
