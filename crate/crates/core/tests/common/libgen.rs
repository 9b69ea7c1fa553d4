//! Random libraries built from small plans.

use proptest::prelude::*;
use sp_audit::facts::{
    AdtKind, CallSiteFact, FieldFact, FnKind, FunctionFact, FunctionId, LibraryFacts, ModuleClass, ParamClass,
    ParamFact, RetClass, RetFact, Safety, TypeFact, TypeId, Visibility,
};

pub const TYPE: &str = "S";

pub const EXTERNALS: &[&str] = &[
    "ptr::read",
    "ptr::add",
    "slice::from_raw_parts",
    "slice::get_unchecked",
    "NonNull::new_unchecked",
    "Box::from_raw",
    "str::from_utf8_unchecked",
    "ptr::as_ref",
    "builtin::deref",
    "ffi::mystery",
];

pub const ANNOTATIONS: &[&str] = &[
    "Align(p, T)",
    "!Null(p)",
    "Init(p, T, 1)",
    "Allocated(p, T, 1, any)",
    "Alias(p, 0)",
    "Owning(p)",
    "InBound(p, T, 1)",
    "Allocator(p, T, 1, A)",
    "ValidString(s)",
    "ValidNum(n, [0, 8])",
    "Typed(p, T)",
    "ZST(T) || Init(p, T, 1)",
    "ValidPtr(p, T, 1)",
];

pub const TAG_NAMES: &[&str] = &[
    "Align", "!Null", "Init", "Allocated", "Alias", "Owning", "InBound", "Allocator", "ValidString", "ValidNum",
    "Typed", "Deref",
];

const CTOR_NAMES: &[&str] = &["new", "from_raw", "new_unchecked", "from_raw_in", "with_len"];
const METHOD_NAMES: &[&str] = &["get", "set_len", "as_ref", "get_unchecked", "assume_init", "push"];
const FREE_NAMES: &[&str] = &["f", "read_unchecked", "from_raw", "assume_init_read", "to_ref"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Free,
    Ctor,
    Method,
}

#[derive(Debug, Clone)]
pub struct FnPlan {
    pub role: Role,
    pub name: usize,
    pub is_unsafe: bool,
    pub public: bool,
    pub mut_self: bool,
    pub params: Vec<ParamClass>,
    pub ret: RetClass,
    pub module: ModuleClass,
    /// Indices into the callee pool, taken modulo its size.
    pub calls: Vec<usize>,
    pub annotations: Vec<usize>,
    pub verifies: Vec<usize>,
    pub kills: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LibPlan {
    pub is_enum: bool,
    pub literal: bool,
    pub field_classes: Vec<ParamClass>,
    pub fns: Vec<FnPlan>,
}

fn param_class() -> impl Strategy<Value = ParamClass> {
    prop_oneof![
        3 => Just(ParamClass::RawPointer),
        1 => Just(ParamClass::NonNullPointer),
        1 => Just(ParamClass::Reference),
        1 => Just(ParamClass::Allocator),
        1 => Just(ParamClass::Integer),
        1 => Just(ParamClass::Other),
    ]
}

fn ret_class() -> impl Strategy<Value = RetClass> {
    prop_oneof![
        Just(RetClass::OwnedObject),
        Just(RetClass::Reference),
        Just(RetClass::OptionWrapped),
        Just(RetClass::Unit),
    ]
}

fn module_class() -> impl Strategy<Value = ModuleClass> {
    prop_oneof![
        2 => Just(ModuleClass::Other),
        1 => Just(ModuleClass::Integer),
        1 => Just(ModuleClass::Str),
        1 => Just(ModuleClass::Slice),
    ]
}

fn indices(max_len: usize, bound: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0..bound, 0..=max_len)
}

pub fn fn_plan(role: Role, max_calls: usize) -> impl Strategy<Value = FnPlan> {
    (
        (0usize..8, any::<bool>(), prop::bool::weighted(0.7), any::<bool>()),
        proptest::collection::vec(param_class(), 0..3),
        ret_class(),
        module_class(),
        indices(max_calls, 64),
        (indices(3, ANNOTATIONS.len()), indices(3, TAG_NAMES.len()), indices(2, TAG_NAMES.len())),
    )
        .prop_map(move |((name, is_unsafe, public, mut_self), params, ret, module, calls, (a, v, k))| FnPlan {
            role,
            name,
            is_unsafe,
            public,
            mut_self,
            params,
            ret,
            module,
            calls,
            annotations: a,
            verifies: v,
            kills: k,
        })
}

/// Libraries shaped for the partition oracle: up to four constructors
/// (literal included), four methods and three free functions.
pub fn partition_lib() -> impl Strategy<Value = LibPlan> {
    (
        any::<bool>(),
        any::<bool>(),
        proptest::collection::vec(param_class(), 0..2),
        proptest::collection::vec(fn_plan(Role::Ctor, 0), 0..=3),
        proptest::collection::vec(fn_plan(Role::Method, 3), 0..=4),
        proptest::collection::vec(fn_plan(Role::Free, 3), 0..=3),
    )
        .prop_map(|(is_enum, literal, field_classes, c, m, f)| LibPlan {
            is_enum,
            literal,
            field_classes,
            fns: c.into_iter().chain(m).chain(f).collect(),
        })
}

/// Libraries with at most six functions, literal constructor included.
pub fn audit_lib() -> impl Strategy<Value = LibPlan> {
    let role = prop_oneof![Just(Role::Free), Just(Role::Ctor), Just(Role::Method)];
    (
        any::<bool>(),
        any::<bool>(),
        proptest::collection::vec(param_class(), 0..2),
        proptest::collection::vec(role.prop_flat_map(|r| fn_plan(r, 3)), 1..=6),
    )
        .prop_map(|(is_enum, literal, field_classes, mut fns)| {
            if literal && fns.len() == 6 {
                fns.pop();
            }
            LibPlan { is_enum, literal, field_classes, fns }
        })
}

fn ids(plan: &LibPlan) -> Vec<String> {
    plan.fns
        .iter()
        .enumerate()
        .map(|(i, f)| match f.role {
            Role::Ctor => format!("{TYPE}::{}_{i}", CTOR_NAMES[f.name % CTOR_NAMES.len()]),
            Role::Method => format!("{TYPE}::{}_{i}", METHOD_NAMES[f.name % METHOD_NAMES.len()]),
            Role::Free => format!("{}_{i}", FREE_NAMES[f.name % FREE_NAMES.len()]),
        })
        .collect()
}

pub fn build(plan: &LibPlan) -> LibraryFacts {
    let ids = ids(plan);
    let mut lib = LibraryFacts::empty("generated");
    let vis = |public: bool| if public { Visibility::Public } else { Visibility::Private };
    lib.types.push(TypeFact {
        id: TypeId::new(TYPE),
        name: TYPE.into(),
        adt_kind: if plan.is_enum { AdtKind::Enum } else { AdtKind::Struct },
        fields: plan
            .field_classes
            .iter()
            .enumerate()
            .map(|(i, c)| FieldFact { name: format!("f{i}"), visibility: vis(plan.literal), class: *c })
            .collect(),
        constructors: Vec::new(),
    });
    // Callee pool: unsafe local functions, then externals.
    for (i, f) in plan.fns.iter().enumerate() {
        let mut pool: Vec<String> = plan
            .fns
            .iter()
            .enumerate()
            .filter(|(j, g)| *j != i && g.is_unsafe)
            .map(|(j, _)| ids[j].clone())
            .collect();
        pool.extend(EXTERNALS.iter().map(|s| s.to_string()));
        let mut calls: Vec<CallSiteFact> = f.calls.iter().map(|k| CallSiteFact::direct(pool[k % pool.len()].clone())).collect();
        if f.role == Role::Ctor {
            calls.clear();
        }
        let (kind, owner) = match f.role {
            Role::Free => (FnKind::Function, None),
            Role::Ctor => (FnKind::Constructor, Some(TypeId::new(TYPE))),
            Role::Method => (FnKind::DynMethod, Some(TypeId::new(TYPE))),
        };
        let ret = if f.role == Role::Ctor {
            RetFact { class: RetClass::OwnedObject, of_type: Some(TypeId::new(TYPE)) }
        } else {
            RetFact { class: f.ret, of_type: None }
        };
        let id = FunctionId::new(ids[i].clone());
        lib.functions.push(FunctionFact {
            id: id.clone(),
            name: id.short_name().to_string(),
            path: String::new(),
            kind,
            safety: if f.is_unsafe { Safety::Unsafe } else { Safety::Safe },
            visibility: vis(f.public),
            owner_type: owner,
            takes_mut_self: f.role == Role::Method && f.mut_self,
            params: f.params.iter().enumerate().map(|(k, c)| ParamFact { name: format!("a{k}"), class: *c }).collect(),
            ret,
            module_class: f.module,
            unsafe_callsites: calls,
            signature: None,
            trait_impl: None,
        });
        let pick = |ix: &[usize], pool: &[&str]| -> Vec<String> {
            let mut v: Vec<String> = ix.iter().map(|k| pool[*k].to_string()).collect();
            v.sort();
            v.dedup();
            v
        };
        if !f.annotations.is_empty() {
            lib.annotations.insert(id.clone(), pick(&f.annotations, ANNOTATIONS));
        }
        if !f.verifies.is_empty() {
            lib.verifies.insert(id.clone(), pick(&f.verifies, TAG_NAMES));
        }
        if f.role == Role::Method && f.mut_self && !f.kills.is_empty() {
            lib.kills.insert(id, pick(&f.kills, TAG_NAMES));
        }
    }
    lib.finalize().expect("generated library is well formed")
}
