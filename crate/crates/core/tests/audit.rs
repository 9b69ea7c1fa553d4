use std::path::{Path, PathBuf};

use sp_audit::audit::{audit, Finding, FindingKind, RuleId};
use sp_audit::dsl::{Registry, TagSet};
use sp_audit::extract::extract_dir;
use sp_audit::facts::{load_facts, LibraryFacts};
use sp_audit::partition::partition;
use sp_audit::tagdb::TagDatabase;
use sp_audit::upg::build_upg;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn findings_of(facts: &LibraryFacts) -> Vec<Finding> {
    let g = build_upg(facts);
    let p = partition(&g, facts);
    audit(facts, &g, &p, &TagDatabase::bundled(), Registry::builtin()).unwrap()
}

fn run_json(name: &str) -> Vec<Finding> {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    findings_of(&load_facts(&text).unwrap())
}

fn tag_findings(fs: &[Finding], subject: &str) -> Vec<(FindingKind, RuleId, String)> {
    fs.iter()
        .filter(|f| f.subject == subject)
        .filter(|f| matches!(f.kind, FindingKind::MissingTag | FindingKind::SuperfluousTag))
        .map(|f| (f.kind, f.rule, f.tags.to_string()))
        .collect()
}

fn set(tags: &[&str]) -> String {
    tags.iter().copied().collect::<TagSet>().to_string()
}

use FindingKind::{MissingTag as Missing, SuperfluousTag as Superfluous};

#[test]
fn box_from_raw() {
    let fs = run_json("table5/box_from_raw.json");
    assert_eq!(
        tag_findings(&fs, "Box::from_raw"),
        [
            (Missing, RuleId::InferRaw2Own, set(&["Alias"])),
            (Missing, RuleId::InferDelegation, set(&["Allocator"])),
        ]
    );
}

#[test]
fn box_from_raw_in() {
    let fs = run_json("table5/box_from_raw_in.json");
    assert_eq!(
        tag_findings(&fs, "Box::from_raw_in"),
        [
            (Missing, RuleId::InferRaw2Own, set(&["Alias"])),
            (Missing, RuleId::InferAllocator, set(&["Allocator"])),
        ]
    );
    assert!(!fs.iter().any(|f| f.subject == "Box::new_in"), "{fs:#?}");
}

#[test]
fn cstring_from_raw() {
    let fs = run_json("table5/cstring_from_raw.json");
    assert_eq!(
        tag_findings(&fs, "CString::from_raw"),
        [(Missing, RuleId::InferRaw2Own, set(&["Alias", "Owning", "Allocated"]))]
    );
}

#[test]
fn str_from_boxed_utf8_unchecked() {
    let fs = run_json("table5/str_from_boxed_utf8_unchecked.json");
    assert_eq!(
        tag_findings(&fs, "str::from_boxed_utf8_unchecked"),
        [(Missing, RuleId::InferUnchecked, set(&["ValidString"]))]
    );
}

#[test]
fn arc_and_rc_increment_strong_count() {
    let fs = run_json("table5/arc_increment_strong_count.json");
    assert_eq!(
        tag_findings(&fs, "Arc::increment_strong_count"),
        [(Missing, RuleId::InferDelegation, set(&["Allocator", "ValidNum", "Align"]))]
    );
    let fs = run_json("table5/rc_increment_strong_count.json");
    assert_eq!(
        tag_findings(&fs, "Rc::increment_strong_count"),
        [(Missing, RuleId::InferDelegation, set(&["ValidNum", "Align"]))]
    );
}

#[test]
fn read_unaligned_non_null_is_superfluous() {
    let fs = run_json("table5/ptr_read_unaligned.json");
    assert_eq!(fs.len(), 1, "{fs:#?}");
    assert_eq!(tag_findings(&fs, "ptr::read_unaligned"), [(Superfluous, RuleId::InferDelegation, set(&["!Null"]))]);
}

#[test]
fn from_utf8_unchecked_mut_is_bottom() {
    let fs = run_json("table5/str_from_utf8_unchecked_mut.json");
    assert_eq!(
        tag_findings(&fs, "str::from_utf8_unchecked_mut"),
        [(Missing, RuleId::InferBottom, set(&["ValidString"]))]
    );
    assert!(fs.iter().any(|f| f.kind == FindingKind::EmptyAnnotation));
}

#[test]
fn pin_literal_constructor_is_unsound() {
    let fs = run_json("pin.json");
    assert_eq!(fs.len(), 1, "{fs:#?}");
    assert_eq!(fs[0].kind, FindingKind::LiteralConstructorSoundness);
    assert_eq!(fs[0].subject, "Pin");
    assert_eq!(fs[0].tags, set_of(&["Pinned"]));
}

fn set_of(tags: &[&str]) -> TagSet {
    tags.iter().copied().collect()
}

#[test]
fn char_enum_literal_is_exempt() {
    assert_eq!(run_json("ascii_char.json"), []);
}

#[test]
fn annotated_listing1_leaves_only_st2() {
    let facts = extract_dir(&fixture("listing1_annotated"), &TagDatabase::bundled()).unwrap().facts;
    let fs = findings_of(&facts);
    assert_eq!(fs.len(), 1, "{fs:#?}");
    assert_eq!(fs[0].kind, FindingKind::LiteralConstructorSoundness);
    assert_eq!(fs[0].subject, "St2");
    // the literal constructor takes the raw `ptr` field, so nothing is credited
    assert_eq!(fs[0].tags, set_of(&["Align", "Alias", "InBound", "Init", "Owning", "ValidNum"]));
}

#[test]
fn unannotated_listing1_reports_bottom() {
    let facts = extract_dir(&fixture("listing1"), &TagDatabase::bundled()).unwrap().facts;
    let fs = findings_of(&facts);
    let empty: Vec<&str> =
        fs.iter().filter(|f| f.kind == FindingKind::EmptyAnnotation).map(|f| f.subject.as_str()).collect();
    assert_eq!(empty, ["St1::get", "St2::from", "St2::set_len"]);
}

fn facts_from(v: serde_json::Value) -> LibraryFacts {
    load_facts(&v.to_string()).unwrap()
}

fn free_fn(id: &str, params: &[&str], ret: &str, callees: &[&str]) -> serde_json::Value {
    serde_json::json!({
        "id": id, "name": id.rsplit("::").next().unwrap(), "kind": "function",
        "safety": "unsafe", "visibility": "public",
        "params": params.iter().enumerate().map(|(i, c)| serde_json::json!({"name": format!("a{i}"), "class": c})).collect::<Vec<_>>(),
        "ret": { "class": ret },
        "unsafe_callsites": callees.iter().map(|c| serde_json::json!({"callee": {"direct": c}})).collect::<Vec<_>>(),
    })
}

#[test]
fn option_return_drops_unchecked_tags() {
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "functions": [free_fn("get", &["reference", "integer"], "option_wrapped", &["slice::get_unchecked"])],
        "annotations": { "get": ["Typed(a0, T)"] },
    }));
    assert_eq!(findings_of(&facts), []);
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "functions": [free_fn("get", &["reference", "integer"], "reference", &["slice::get_unchecked"])],
        "annotations": { "get": ["Typed(a0, T)"] },
    }));
    let fs = findings_of(&facts);
    assert_eq!(tag_findings(&fs, "get"), [(Missing, RuleId::InferDelegation, set(&["InBound"]))]);
}

#[test]
fn declared_tag_removed_by_elimination_is_superfluous() {
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "functions": [free_fn("wrap", &["non_null_pointer"], "owned_object", &["NonNull::new_unchecked"])],
        "annotations": { "wrap": ["!Null(a0)"] },
    }));
    let fs = findings_of(&facts);
    assert_eq!(tag_findings(&fs, "wrap"), [(Superfluous, RuleId::InferNonNull, set(&["!Null"]))]);
}

#[test]
fn non_null_parameter_drops_not_null() {
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "functions": [free_fn("wrap", &["non_null_pointer"], "owned_object", &["NonNull::new_unchecked"])],
        "annotations": { "wrap": ["Typed(a0, T)"] },
    }));
    assert_eq!(findings_of(&facts), []);
}

#[test]
fn two_callees_are_unioned() {
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "functions": [
            free_fn("a", &[], "unit", &[]),
            free_fn("b", &[], "unit", &[]),
            free_fn("both", &[], "unit", &["a", "b"]),
        ],
        "annotations": { "a": ["Opened(fd)"], "b": ["Typed(p, T)"], "both": ["Alive(x, l)"] },
    }));
    let fs = findings_of(&facts);
    assert_eq!(tag_findings(&fs, "both"), [(Missing, RuleId::InferDelegation, set(&["Opened", "Typed"]))]);
    assert!(fs.iter().all(|f| f.unit.is_some()));
}

#[test]
fn unknown_external_is_unresolved() {
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "functions": [free_fn("call", &[], "unit", &["ffi::mystery"])],
        "annotations": { "call": ["Typed(p, T)"] },
    }));
    let fs = findings_of(&facts);
    assert_eq!(fs.len(), 1);
    assert_eq!(fs[0].kind, FindingKind::UnresolvedExternal);
    assert!(fs[0].evidence.contains("ffi::mystery"));
}

#[test]
fn safe_constructor_does_not_inherit_raw_pointer_tags() {
    let ctor = |id: &str, safety: &str, param: &str| {
        serde_json::json!({
            "id": id, "name": id.rsplit("::").next().unwrap(), "kind": "constructor",
            "safety": safety, "visibility": "public", "owner_type": "Bx",
            "params": [{"name": "x", "class": param}], "ret": {"class": "owned_object", "of_type": "Bx"},
        })
    };
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "types": [{"id": "Bx", "name": "Bx", "adt_kind": "struct", "fields": [{"name": "p", "visibility": "private"}]}],
        "functions": [ctor("Bx::from_raw", "unsafe", "raw_pointer"), ctor("Bx::new", "safe", "other")],
        "annotations": { "Bx::from_raw": ["Align(x, T)", "Deref(x, T, 1)", "Alias(x, 0)", "Owning(x)"] },
    }));
    assert_eq!(findings_of(&facts), []);
    // a requirement outside the raw-pointer set is not credited
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "types": [{"id": "Bx", "name": "Bx", "adt_kind": "struct", "fields": [{"name": "p", "visibility": "private"}]}],
        "functions": [ctor("Bx::from_raw", "unsafe", "raw_pointer"), ctor("Bx::new", "safe", "other")],
        "annotations": { "Bx::from_raw": ["Align(x, T)", "Deref(x, T, 1)", "Alias(x, 0)", "Owning(x)", "Typed(x, T)"] },
    }));
    let fs = findings_of(&facts);
    assert_eq!(fs.len(), 1);
    assert_eq!(fs[0].kind, FindingKind::ConstructorInconsistency);
    assert_eq!(fs[0].subject, "Bx::new");
    assert_eq!(fs[0].tags, set_of(&["Typed"]));
}

#[test]
fn bad_annotation_is_an_error() {
    let facts = facts_from(serde_json::json!({
        "facts_version": 1, "name": "t",
        "functions": [free_fn("f", &[], "unit", &[])],
        "annotations": { "f": ["Align(p"] },
    }));
    let g = build_upg(&facts);
    let err = audit(&facts, &g, &partition(&g, &facts), &TagDatabase::bundled(), Registry::builtin()).unwrap_err();
    assert!(err.to_string().contains("`f`"), "{err}");
}
