//! Canonical model of a library under audit and the facts-file loader.
//!
//! Every later stage (graph, partitioning, auditing) consumes only
//! [`LibraryFacts`]. The JSON form is the interchange format between the
//! source extractor and the rest of the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Only version of the facts file this crate reads or writes.
pub const FACTS_VERSION: u32 = 1;

/// Reserved callee id for raw-pointer dereference.
pub const DEREF_ID: &str = "builtin::deref";

/// Fully qualified function path, e.g. `St2::from`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionId(String);

impl FunctionId {
    pub fn new(id: impl Into<String>) -> Self {
        FunctionId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn deref() -> Self {
        FunctionId::new(DEREF_ID)
    }

    pub fn is_deref(&self) -> bool {
        self.0 == DEREF_ID
    }

    /// Last path segment.
    pub fn short_name(&self) -> &str {
        self.0.rsplit("::").next().unwrap_or(&self.0)
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FunctionId {
    fn from(s: &str) -> Self {
        FunctionId::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeId(String);

impl TypeId {
    pub fn new(id: impl Into<String>) -> Self {
        TypeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TypeId {
    fn from(s: &str) -> Self {
        TypeId::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnKind {
    Function,
    StaticMethod,
    DynMethod,
    Constructor,
    LiteralConstructor,
}

impl FnKind {
    pub fn is_constructor(self) -> bool {
        matches!(self, FnKind::Constructor | FnKind::LiteralConstructor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Safety {
    Safe,
    Unsafe,
}

impl Safety {
    pub fn is_unsafe(self) -> bool {
        self == Safety::Unsafe
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Private,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParamClass {
    RawPointer,
    NonNullPointer,
    Reference,
    MutableReference,
    OwnedObject,
    Allocator,
    Integer,
    #[default]
    Other,
}

impl ParamClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamClass::RawPointer => "raw_pointer",
            ParamClass::NonNullPointer => "non_null_pointer",
            ParamClass::Reference => "reference",
            ParamClass::MutableReference => "mutable_reference",
            ParamClass::OwnedObject => "owned_object",
            ParamClass::Allocator => "allocator",
            ParamClass::Integer => "integer",
            ParamClass::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RetClass {
    OwnedObject,
    Reference,
    OptionWrapped,
    #[default]
    Unit,
    Other,
}

impl RetClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RetClass::OwnedObject => "owned_object",
            RetClass::Reference => "reference",
            RetClass::OptionWrapped => "option_wrapped",
            RetClass::Unit => "unit",
            RetClass::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModuleClass {
    Integer,
    Str,
    Slice,
    #[default]
    Other,
}

impl ModuleClass {
    /// Classify a module path by its last segment.
    pub fn from_module_path(path: &str) -> Self {
        let last = path.rsplit("::").next().unwrap_or(path);
        match last {
            "str" => ModuleClass::Str,
            "slice" => ModuleClass::Slice,
            "num" | "i8" | "i16" | "i32" | "i64" | "i128" | "isize" | "u8" | "u16" | "u32" | "u64"
            | "u128" | "usize" => ModuleClass::Integer,
            _ => ModuleClass::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFact {
    pub name: String,
    pub class: ParamClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RetFact {
    pub class: RetClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub of_type: Option<TypeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Callee {
    Direct(FunctionId),
    GenericTraitMethod { trait_name: String, method: String },
    FnParam(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallSiteFact {
    pub callee: Callee,
}

impl CallSiteFact {
    pub fn direct(id: impl Into<String>) -> Self {
        CallSiteFact { callee: Callee::Direct(FunctionId::new(id)) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionFact {
    pub id: FunctionId,
    pub name: String,
    #[serde(default)]
    pub path: String,
    pub kind: FnKind,
    pub safety: Safety,
    pub visibility: Visibility,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner_type: Option<TypeId>,
    #[serde(default)]
    pub takes_mut_self: bool,
    #[serde(default)]
    pub params: Vec<ParamFact>,
    #[serde(default)]
    pub ret: RetFact,
    #[serde(default)]
    pub module_class: ModuleClass,
    #[serde(default)]
    pub unsafe_callsites: Vec<CallSiteFact>,
    /// Normalized `fn(..) -> ..` text, used to resolve calls through fn parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    /// Trait this method implements, used to resolve calls on generic receivers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trait_impl: Option<String>,
}

impl FunctionFact {
    pub fn is_unsafe(&self) -> bool {
        self.safety.is_unsafe()
    }

    pub fn is_public(&self) -> bool {
        self.visibility == Visibility::Public
    }

    pub fn has_param(&self, class: ParamClass) -> bool {
        self.params.iter().any(|p| p.class == class)
    }

    /// Functions that carry an unsafe marker: declared unsafe or containing unsafe call sites.
    pub fn has_unsafe_marker(&self) -> bool {
        self.is_unsafe() || !self.unsafe_callsites.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdtKind {
    Struct,
    Enum,
    Union,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFact {
    pub name: String,
    pub visibility: Visibility,
    #[serde(default)]
    pub class: ParamClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeFact {
    pub id: TypeId,
    pub name: String,
    pub adt_kind: AdtKind,
    #[serde(default)]
    pub fields: Vec<FieldFact>,
    #[serde(default)]
    pub constructors: Vec<FunctionId>,
}

impl TypeFact {
    pub fn literal_constructor_id(&self) -> FunctionId {
        FunctionId::new(format!("{}::literal", self.id))
    }
}

/// True iff every field is publicly visible (vacuously true for zero fields).
pub fn literal_constructible(t: &TypeFact) -> bool {
    t.fields.iter().all(|f| f.visibility == Visibility::Public)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FactsError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unsupported facts_version {0} (expected {FACTS_VERSION})")]
    UnsupportedVersion(u32),
    #[error("dangling reference to `{id}` in {context}")]
    DanglingReference { id: String, context: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("invalid fact for `{id}`: {reason}")]
    InvalidFact { id: String, reason: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryFacts {
    pub facts_version: u32,
    pub name: String,
    #[serde(default)]
    pub functions: Vec<FunctionFact>,
    #[serde(default)]
    pub types: Vec<TypeFact>,
    /// Declared safety annotations (DSL strings) per function.
    #[serde(default)]
    pub annotations: BTreeMap<FunctionId, Vec<String>>,
    /// Explicitly verified safety properties per function.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub verifies: BTreeMap<FunctionId, Vec<String>>,
    /// Guarantees each method may invalidate on its receiver.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub kills: BTreeMap<FunctionId, Vec<String>>,
    #[serde(skip)]
    fn_index: BTreeMap<FunctionId, usize>,
    #[serde(skip)]
    type_index: BTreeMap<TypeId, usize>,
}

/// Parse and validate a facts document.
pub fn load_facts(text: &str) -> Result<LibraryFacts, FactsError> {
    let raw: LibraryFacts =
        serde_json::from_str(text).map_err(|e| FactsError::Schema(e.to_string()))?;
    if raw.facts_version != FACTS_VERSION {
        return Err(FactsError::UnsupportedVersion(raw.facts_version));
    }
    LibraryFacts::finalize(raw)
}

impl LibraryFacts {
    pub fn empty(name: impl Into<String>) -> Self {
        LibraryFacts {
            facts_version: FACTS_VERSION,
            name: name.into(),
            functions: Vec::new(),
            types: Vec::new(),
            annotations: BTreeMap::new(),
            verifies: BTreeMap::new(),
            kills: BTreeMap::new(),
            fn_index: BTreeMap::new(),
            type_index: BTreeMap::new(),
        }
    }

    /// Synthesize literal constructors, register constructors with their
    /// owner types, build indices and check every invariant.
    pub fn finalize(mut self) -> Result<LibraryFacts, FactsError> {
        self.type_index.clear();
        for (i, t) in self.types.iter().enumerate() {
            if self.type_index.insert(t.id.clone(), i).is_some() {
                return Err(FactsError::DuplicateId(t.id.to_string()));
            }
        }

        let mut existing: BTreeSet<FunctionId> = BTreeSet::new();
        for f in &self.functions {
            if !existing.insert(f.id.clone()) {
                return Err(FactsError::DuplicateId(f.id.to_string()));
            }
        }

        for t in &mut self.types {
            if !literal_constructible(t) {
                continue;
            }
            let lit = t.literal_constructor_id();
            if !existing.contains(&lit) {
                self.functions.push(FunctionFact {
                    id: lit.clone(),
                    name: "literal".into(),
                    path: String::new(),
                    kind: FnKind::LiteralConstructor,
                    safety: Safety::Safe,
                    visibility: Visibility::Public,
                    owner_type: Some(t.id.clone()),
                    takes_mut_self: false,
                    params: t
                        .fields
                        .iter()
                        .map(|f| ParamFact { name: f.name.clone(), class: f.class })
                        .collect(),
                    ret: RetFact { class: RetClass::OwnedObject, of_type: Some(t.id.clone()) },
                    module_class: ModuleClass::Other,
                    unsafe_callsites: Vec::new(),
                    signature: None,
                    trait_impl: None,
                });
                existing.insert(lit.clone());
            }
            if !t.constructors.contains(&lit) {
                t.constructors.push(lit);
            }
        }

        self.fn_index = self
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id.clone(), i))
            .collect();

        // Constructors are registered with their owner even if the type omitted them.
        for f in &self.functions {
            if !f.kind.is_constructor() {
                continue;
            }
            let owner = f.owner_type.as_ref().ok_or_else(|| FactsError::InvalidFact {
                id: f.id.to_string(),
                reason: "constructor without owner_type".into(),
            })?;
            let ti = *self.type_index.get(owner).ok_or_else(|| FactsError::DanglingReference {
                id: owner.to_string(),
                context: format!("owner_type of `{}`", f.id),
            })?;
            if !self.types[ti].constructors.contains(&f.id) {
                self.types[ti].constructors.push(f.id.clone());
            }
        }

        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), FactsError> {
        for f in &self.functions {
            let invalid = |reason: &str| FactsError::InvalidFact {
                id: f.id.to_string(),
                reason: reason.to_string(),
            };
            match f.kind {
                FnKind::DynMethod | FnKind::Constructor | FnKind::LiteralConstructor => {
                    if f.owner_type.is_none() {
                        return Err(invalid("method or constructor without owner_type"));
                    }
                }
                FnKind::Function => {
                    if f.owner_type.is_some() {
                        return Err(invalid("free function with owner_type"));
                    }
                }
                FnKind::StaticMethod => {}
            }
            if f.kind == FnKind::LiteralConstructor
                && (f.is_unsafe() || !f.unsafe_callsites.is_empty())
            {
                return Err(invalid("literal constructor must be safe with no call sites"));
            }
            if f.kind == FnKind::Constructor
                && (f.ret.class != RetClass::OwnedObject
                    || f.ret.of_type.as_ref().is_some_and(|t| Some(t) != f.owner_type.as_ref()))
            {
                return Err(invalid("constructor must return an owned object of its owner type"));
            }
            if let Some(owner) = &f.owner_type {
                if !self.type_index.contains_key(owner) {
                    return Err(FactsError::DanglingReference {
                        id: owner.to_string(),
                        context: format!("owner_type of `{}`", f.id),
                    });
                }
            }
            for site in &f.unsafe_callsites {
                if let Callee::Direct(id) = &site.callee {
                    if self.looks_local(id) && !self.fn_index.contains_key(id) {
                        return Err(FactsError::DanglingReference {
                            id: id.to_string(),
                            context: format!("call site in `{}`", f.id),
                        });
                    }
                }
            }
        }
        for t in &self.types {
            for c in &t.constructors {
                let Some(f) = self.function(c) else {
                    return Err(FactsError::DanglingReference {
                        id: c.to_string(),
                        context: format!("constructors of `{}`", t.id),
                    });
                };
                if !f.kind.is_constructor() || f.owner_type.as_ref() != Some(&t.id) {
                    return Err(FactsError::InvalidFact {
                        id: c.to_string(),
                        reason: format!("listed as constructor of `{}`", t.id),
                    });
                }
            }
        }
        for (section, map) in
            [("annotations", &self.annotations), ("verifies", &self.verifies), ("kills", &self.kills)]
        {
            for id in map.keys() {
                if !self.fn_index.contains_key(id) {
                    return Err(FactsError::DanglingReference {
                        id: id.to_string(),
                        context: section.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// An id is expected to be local when it has no path or its leading
    /// segment names a local type. Anything else is an external API.
    fn looks_local(&self, id: &FunctionId) -> bool {
        if id.is_deref() {
            return false;
        }
        match id.as_str().rsplit_once("::") {
            None => true,
            Some((prefix, _)) => self.type_index.contains_key(&TypeId::new(prefix)),
        }
    }

    pub fn function(&self, id: &FunctionId) -> Option<&FunctionFact> {
        self.fn_index.get(id).map(|&i| &self.functions[i])
    }

    pub fn type_fact(&self, id: &TypeId) -> Option<&TypeFact> {
        self.type_index.get(id).map(|&i| &self.types[i])
    }

    pub fn is_local(&self, id: &FunctionId) -> bool {
        self.fn_index.contains_key(id)
    }

    pub fn constructors_of(&self, t: &TypeId) -> Vec<&FunctionFact> {
        self.type_fact(t)
            .map(|t| t.constructors.iter().filter_map(|c| self.function(c)).collect())
            .unwrap_or_default()
    }

    /// Dynamic methods of `t` that contain unsafe call sites, are declared
    /// unsafe, or take a mutable self.
    pub fn api_set_of(&self, t: &TypeId) -> Result<BTreeSet<FunctionId>, FactsError> {
        if !self.type_index.contains_key(t) {
            return Err(FactsError::UnknownType(t.to_string()));
        }
        Ok(self
            .functions
            .iter()
            .filter(|f| f.kind == FnKind::DynMethod && f.owner_type.as_ref() == Some(t))
            .filter(|f| f.has_unsafe_marker() || f.takes_mut_self)
            .map(|f| f.id.clone())
            .collect())
    }

    /// Mutable-self methods of `t`: the methods able to invalidate constructor guarantees.
    pub fn mutating_methods_of(&self, t: &TypeId) -> BTreeSet<FunctionId> {
        self.functions
            .iter()
            .filter(|f| f.kind == FnKind::DynMethod && f.owner_type.as_ref() == Some(t))
            .filter(|f| f.takes_mut_self)
            .map(|f| f.id.clone())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("facts serialize")
    }
}
