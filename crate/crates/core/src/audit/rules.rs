use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    AuditAnnotation,
    AuditCallEncap,
    AuditCallDeleg,
    AuditStructEncap,
    AuditStructDeleg,
    AuditConstructors,
    InferBottom,
    InferRaw2Own,
    InferRaw2Ref,
    InferAllocator,
    InferUnchecked,
    InferAssumeInit,
    InferDelegation,
    InferUncheckedOption,
    InferNonNull,
    InferCtorConsistency,
    InferLiteralEnum,
    InferRawCtor,
}

impl RuleId {
    pub const ALL: [RuleId; 18] = [
        RuleId::AuditAnnotation,
        RuleId::AuditCallEncap,
        RuleId::AuditCallDeleg,
        RuleId::AuditStructEncap,
        RuleId::AuditStructDeleg,
        RuleId::AuditConstructors,
        RuleId::InferBottom,
        RuleId::InferRaw2Own,
        RuleId::InferRaw2Ref,
        RuleId::InferAllocator,
        RuleId::InferUnchecked,
        RuleId::InferAssumeInit,
        RuleId::InferDelegation,
        RuleId::InferUncheckedOption,
        RuleId::InferNonNull,
        RuleId::InferCtorConsistency,
        RuleId::InferLiteralEnum,
        RuleId::InferRawCtor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::AuditAnnotation => "audit.annotation",
            RuleId::AuditCallEncap => "audit.call_encap",
            RuleId::AuditCallDeleg => "audit.call_deleg",
            RuleId::AuditStructEncap => "audit.struct_encap",
            RuleId::AuditStructDeleg => "audit.struct_deleg",
            RuleId::AuditConstructors => "audit.constructors",
            RuleId::InferBottom => "infer.bottom",
            RuleId::InferRaw2Own => "infer.raw2own",
            RuleId::InferRaw2Ref => "infer.raw2ref",
            RuleId::InferAllocator => "infer.allocator",
            RuleId::InferUnchecked => "infer.unchecked",
            RuleId::InferAssumeInit => "infer.assume_init",
            RuleId::InferDelegation => "infer.delegation",
            RuleId::InferUncheckedOption => "infer.unchecked_option",
            RuleId::InferNonNull => "infer.nonnull",
            RuleId::InferCtorConsistency => "infer.ctor_consistency",
            RuleId::InferLiteralEnum => "infer.literal_enum",
            RuleId::InferRawCtor => "infer.raw_ctor",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            RuleId::AuditAnnotation => "API annotation",
            RuleId::AuditCallEncap => "API encapsulation",
            RuleId::AuditCallDeleg => "API delegation",
            RuleId::AuditStructEncap => "weakest struct encapsulation",
            RuleId::AuditStructDeleg => "weakest struct delegation",
            RuleId::AuditConstructors => "constructor agreement",
            RuleId::InferBottom => "bottom annotation",
            RuleId::InferRaw2Own => "raw pointer to ownership",
            RuleId::InferRaw2Ref => "raw pointer to reference",
            RuleId::InferAllocator => "designated allocator",
            RuleId::InferUnchecked => "unchecked",
            RuleId::InferAssumeInit => "assume init",
            RuleId::InferDelegation => "delegation for function calls",
            RuleId::InferUncheckedOption => "unchecked-option elimination",
            RuleId::InferNonNull => "NonNull elimination of !Null",
            RuleId::InferCtorConsistency => "constructor consistency",
            RuleId::InferLiteralEnum => "literal enum constructor elimination",
            RuleId::InferRawCtor => "raw pointer constructor elimination",
        }
    }

    /// Premise and conclusion in plain text.
    pub fn explain(self) -> &'static str {
        match self {
            RuleId::AuditAnnotation => "an unsafe function or method with no unsafe callee must state its required safety properties RS",
            RuleId::AuditCallEncap => "a safe caller must verify the union of its unsafe callees' RS: U RS(callee) <= VS(caller)",
            RuleId::AuditCallDeleg => "an unsafe caller must delegate or verify its callees' RS: U RS(callee) <= RS(caller) + VS(caller)",
            RuleId::AuditStructEncap => "for a safe method m with constructors C: U RS(callee) <= (& over c of RS(c) + VS(c)) + VS(m)",
            RuleId::AuditStructDeleg => "for an unsafe method m with constructors C: U RS(callee) <= (& over c of RS(c) + VS(c)) + RS(m) + VS(m)",
            RuleId::AuditConstructors => "all constructors of a type should agree: RS(ci) + VS(ci) == RS(cj) + VS(cj)",
            RuleId::InferBottom => "f is pub and unsafe => RS(f) is not empty",
            RuleId::InferRaw2Own => "f unsafe, params contain a raw pointer, returns an owned object => RS(f) >= {Align, Allocated, InBound, Alias, Owning}",
            RuleId::InferRaw2Ref => "f unsafe, params contain a raw pointer, returns a reference => RS(f) >= {Align, Allocated, InBound, Alias}",
            RuleId::InferAllocator => "f unsafe, params contain a raw pointer and an allocator => RS(f) >= {Allocator}",
            RuleId::InferUnchecked => "f unsafe, name contains \"unchecked\" => RS(f) >= {ValidNum} in integer modules, {ValidString} in str, {InBound} in slice",
            RuleId::InferAssumeInit => "f unsafe, name contains \"assume_init\" => RS(f) >= {Init}",
            RuleId::InferDelegation => "f' invokes unsafe callees F => RS(f') >= U RS(f) for f in F",
            RuleId::InferUncheckedOption => "f' invokes an unchecked callee f1 and returns Option => drop the tags f1 gets from the unchecked rule",
            RuleId::InferNonNull => "f' invokes a callee requiring !Null and takes a NonNull parameter => drop !Null",
            RuleId::InferCtorConsistency => "ci unsafe, cj any other constructor of the same type => RS(cj) + VS(cj) >= RS(ci)",
            RuleId::InferLiteralEnum => "enum with an unsafe \"unchecked\" constructor ci => the literal constructor verifies RS(ci)",
            RuleId::InferRawCtor => "ci unsafe with a raw pointer parameter, cj without one => cj verifies the raw pointer tags of ci",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown rule `{0}`")]
pub struct UnknownRule(pub String);

impl FromStr for RuleId {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<RuleId, UnknownRule> {
        RuleId::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| UnknownRule(s.to_string()))
    }
}

impl Serialize for RuleId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}
