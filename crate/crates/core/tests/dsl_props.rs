mod common;

use proptest::prelude::*;
use sp_audit::dsl::algebra::imply_close;
use sp_audit::dsl::{coarse, expand_compound, normalize, parse_sp, Registry, SpExpr, TagSet};

use common::spgen;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_round_trip(e in spgen::expr()) {
        let text = e.to_string();
        let back = parse_sp(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(&back, &e, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn coarse_ignores_usage_and_arguments(t in spgen::term()) {
        let reg = Registry::builtin();
        let mut bare = t.clone();
        bare.usage = None;
        prop_assert_eq!(coarse(&SpExpr::Term(t), reg), coarse(&SpExpr::Term(bare), reg));
    }

    #[test]
    fn imply_close_is_idempotent(e in spgen::expr()) {
        let reg = Registry::builtin();
        let once = imply_close(&coarse(&e, reg), reg);
        prop_assert_eq!(imply_close(&once, reg), once);
    }
}

fn reg() -> &'static Registry {
    Registry::builtin()
}

#[test]
fn quoted_annotations_parse() {
    for s in common::QUOTED_ANNOTATIONS {
        let e = parse_sp(s).unwrap_or_else(|err| panic!("{s}: {err}"));
        assert_eq!(parse_sp(&e.to_string()).unwrap(), e, "{s}");
    }
}

#[test]
fn normalize_drops_implied_terms() {
    let norm = |s: &str| {
        let e = parse_sp(s).unwrap();
        let terms: Vec<_> = e.terms().into_iter().cloned().collect();
        normalize(&terms, reg()).iter().map(|t| SpExpr::Term(t.clone()).to_string()).collect::<Vec<_>>()
    };
    assert_eq!(norm("!Null(p) && Allocated(p, T, 1, any)"), ["Allocated(p, T, 1, any)"]);
    assert_eq!(norm("Allocated(p, T, len, any) && Init(p, T, len)"), ["Init(p, T, len)"]);
}

#[test]
fn compound_expansions() {
    let cases = [
        ("Deref(p, T, len)", "Allocated(p, T, len, any) && InBound(p, T, len)"),
        (
            "ValidPtr(p, T, len)",
            "Size(T, 0) || (Size(T, !0) && Allocated(p, T, len, any) && InBound(p, T, len))",
        ),
        ("Ptr2Ref(p, T)", "Align(p, T) && Allocated(p, T, 1, any) && InBound(p, T, 1) && Alias(p, 0)"),
        ("Layout(p, layout)", "ValidNum(rem(p, layout.align), 0) && Allocated(p, u8, layout.size, heap)"),
    ];
    for (input, want) in cases {
        let got = expand_compound(&parse_sp(input).unwrap(), reg()).unwrap();
        assert_eq!(got.to_string(), want, "{input}");
    }
}

#[test]
fn coarse_of_compound() {
    let e = parse_sp("ValidPtr(p, T, 1)").unwrap();
    let want: TagSet = ["Size", "Allocated", "InBound"].into_iter().collect();
    assert_eq!(coarse(&e, reg()), want);
}

#[test]
fn implication_is_transitive() {
    let s: TagSet = ["Init"].into_iter().collect();
    assert_eq!(imply_close(&s, reg()).to_string(), "{Allocated, Init, !Null}");
}
