//! Random safety-property expressions in the printer's canonical form.

use proptest::prelude::*;
use sp_audit::dsl::{AriExpr, SpArg, SpExpr, SpTerm, Usage, ValRange};

const TAGS: &[&str] = &[
    "Align", "Size", "Padding", "Null", "Allocated", "InBound", "Overlap", "ValidNum", "ValidString", "ValidCStr",
    "Init", "Unwrap", "Typed", "Owning", "Alias", "Alive", "Pinned", "Volatile", "Opened", "Trait", "Reachable",
    "ZST", "Allocator", "Deref", "ValidPtr", "Ptr2Ref", "Layout",
];

fn lower_ident() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("p".to_string()),
        Just("data".to_string()),
        Just("len".to_string()),
        Just("self.ptr".to_string()),
        Just("layout.size".to_string()),
        "[a-z][a-z0-9_]{0,5}".prop_filter("reserved", |s| {
            s != "sizeof" && !sp_audit::dsl::ast::BIN_OPS.contains(&s.as_str())
                && !sp_audit::dsl::ast::UNI_OPS.contains(&s.as_str())
        }),
    ]
}

fn type_ident() -> impl Strategy<Value = String> {
    prop_oneof![Just("T".to_string()), Just("U".to_string()), "[A-Z][a-z]{0,4}"]
}

fn ari() -> impl Strategy<Value = AriExpr> {
    let leaf = prop_oneof![
        lower_ident().prop_map(AriExpr::Var),
        (0u32..1000).prop_map(|n| AriExpr::Num(n.to_string())),
        type_ident().prop_map(AriExpr::SizeOf),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (proptest::sample::select(sp_audit::dsl::ast::BIN_OPS), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| AriExpr::Bin(op.to_string(), Box::new(a), Box::new(b))),
            (proptest::sample::select(sp_audit::dsl::ast::UNI_OPS), inner)
                .prop_map(|(op, a)| AriExpr::Uni(op.to_string(), Box::new(a))),
        ]
    })
}

fn val_range() -> impl Strategy<Value = ValRange> {
    (0i64..100, 0i64..100, any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(a, b, lc, hc, max)| ValRange {
        lo: a.min(b).to_string(),
        hi: if max { "isize::MAX".to_string() } else { a.max(b).to_string() },
        lo_closed: lc,
        hi_closed: hc,
    })
}

fn arg() -> impl Strategy<Value = SpArg> {
    let simple = prop_oneof![
        lower_ident().prop_map(SpArg::FnParId),
        Just(SpArg::RetVal),
        type_ident().prop_map(SpArg::TypePar),
        ari().prop_filter("bare vars print as params", |a| !matches!(a, AriExpr::Var(_)))
            .prop_filter("zero prints as the return value", |a| !matches!(a, AriExpr::Num(n) if n == "0"))
            .prop_map(SpArg::Ari),
        val_range().prop_map(SpArg::ValRange),
        Just(SpArg::Spec("isize::MAX".into())),
        Just(SpArg::Spec("!0".into())),
    ];
    prop_oneof![
        4 => simple.clone(),
        1 => proptest::collection::vec(simple, 3..4).prop_map(SpArg::AddrRange),
    ]
}

pub fn term() -> impl Strategy<Value = SpTerm> {
    (
        any::<bool>(),
        proptest::sample::select(TAGS),
        proptest::collection::vec(arg(), 0..5),
        proptest::option::of(prop_oneof![Just(Usage::Precond), Just(Usage::Hazard), Just(Usage::Option)]),
    )
        .prop_map(|(negated, tag, args, usage)| SpTerm { negated, tag: tag.to_string(), args, usage })
}

pub fn expr() -> impl Strategy<Value = SpExpr> {
    term().prop_map(SpExpr::Term).prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(SpExpr::and),
            proptest::collection::vec(inner, 2..4).prop_map(SpExpr::or),
        ]
    })
}
