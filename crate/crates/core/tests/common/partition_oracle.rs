//! Unit counts by exhaustive enumeration of (callee, caller, constructor)
//! triples over the facts, without the graph.

use std::collections::BTreeSet;

use sp_audit::facts::{Callee, FnKind, FunctionFact, LibraryFacts};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    pub one: usize,
    pub two: usize,
    pub three: usize,
    pub audit: usize,
}

fn direct_callees(f: &FunctionFact) -> BTreeSet<String> {
    f.unsafe_callsites
        .iter()
        .filter_map(|s| match &s.callee {
            Callee::Direct(id) => Some(id.to_string()),
            _ => None,
        })
        .collect()
}

/// Is `callee` an unsafe callee of `caller` that survives deref subsumption?
fn calls(facts: &LibraryFacts, caller: &FunctionFact, callee: &str) -> bool {
    let unsafe_target = |id: &str| match facts.functions.iter().find(|f| f.id.as_str() == id) {
        Some(f) => f.is_unsafe(),
        None => true,
    };
    let targets: Vec<String> = direct_callees(caller).into_iter().filter(|c| unsafe_target(c)).collect();
    if !targets.iter().any(|t| t == callee) {
        return false;
    }
    callee != "builtin::deref" || targets.iter().all(|t| t == "builtin::deref")
}

fn is_ctor_of_owner(caller: &FunctionFact, ctor: &FunctionFact) -> bool {
    caller.kind == FnKind::DynMethod && ctor.kind.is_constructor() && ctor.owner_type == caller.owner_type
}

pub fn count(facts: &LibraryFacts) -> Counts {
    let mut universe: BTreeSet<String> = facts.functions.iter().map(|f| f.id.to_string()).collect();
    for f in &facts.functions {
        universe.extend(direct_callees(f));
    }
    let mut c = Counts { one: 0, two: 0, three: 0, audit: 0 };
    let mut callers_with_units = BTreeSet::new();
    for callee in &universe {
        // (callee, -, -)
        if facts.functions.iter().any(|f| f.id.as_str() == callee && f.is_unsafe()) {
            c.one += 1;
        }
        for caller in &facts.functions {
            if !calls(facts, caller, callee) {
                continue;
            }
            callers_with_units.insert(caller.id.to_string());
            let mut ctors = 0;
            for ctor in &facts.functions {
                if is_ctor_of_owner(caller, ctor) {
                    ctors += 1;
                }
            }
            if ctors == 0 {
                c.two += 1;
            } else {
                c.three += ctors;
            }
        }
    }
    c.audit = c.one + callers_with_units.len();
    c
}
