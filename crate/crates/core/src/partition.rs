//! Splits a UPG into basic units, classifies them by structural pattern and
//! merges them into audit units with a soundness formula each.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::facts::{FunctionId, LibraryFacts};
use crate::upg::{components, NodeKind, NodeSafety, Upg, UpgNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Handling {
    Origin,
    Encapsulation,
    Delegation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CalleeShape {
    Fn,
    Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    OriginFn,
    OriginMethod,
    SafeCallerToFn,
    UnsafeCallerToFn,
    SafeCallerToMethod,
    UnsafeCallerToMethod,
    MethodCaller { ctor_safety: NodeSafety, caller_safety: NodeSafety, callee_shape: CalleeShape },
}

impl PatternKind {
    /// Every refined pattern, in a fixed order.
    pub fn all() -> Vec<PatternKind> {
        let mut v = vec![
            PatternKind::OriginFn,
            PatternKind::OriginMethod,
            PatternKind::SafeCallerToFn,
            PatternKind::UnsafeCallerToFn,
            PatternKind::SafeCallerToMethod,
            PatternKind::UnsafeCallerToMethod,
        ];
        for ctor_safety in [NodeSafety::Safe, NodeSafety::Unsafe] {
            for caller_safety in [NodeSafety::Safe, NodeSafety::Unsafe] {
                for callee_shape in [CalleeShape::Fn, CalleeShape::Method] {
                    v.push(PatternKind::MethodCaller { ctor_safety, caller_safety, callee_shape });
                }
            }
        }
        v
    }

    /// Compact notation, e.g. `f'_s->f_u` or `(c_u=>M)m'_s->f_u`.
    pub fn notation(self) -> String {
        match self {
            PatternKind::OriginFn => "f_u".into(),
            PatternKind::OriginMethod => "m_u".into(),
            PatternKind::SafeCallerToFn => "f'_s->f_u".into(),
            PatternKind::UnsafeCallerToFn => "f'_u->f_u".into(),
            PatternKind::SafeCallerToMethod => "f'_s->m_u".into(),
            PatternKind::UnsafeCallerToMethod => "f'_u->m_u".into(),
            PatternKind::MethodCaller { ctor_safety, caller_safety, callee_shape } => {
                let callee = match callee_shape {
                    CalleeShape::Fn => "f_u",
                    CalleeShape::Method => "m_u",
                };
                format!("(c_{}=>M)m'_{}->{callee}", ctor_safety.as_str(), caller_safety.as_str())
            }
        }
    }

    pub fn handling(self) -> Handling {
        use NodeSafety::*;
        match self {
            PatternKind::OriginFn | PatternKind::OriginMethod => Handling::Origin,
            PatternKind::SafeCallerToFn | PatternKind::SafeCallerToMethod => Handling::Encapsulation,
            PatternKind::UnsafeCallerToFn | PatternKind::UnsafeCallerToMethod => Handling::Delegation,
            PatternKind::MethodCaller { ctor_safety: Safe, caller_safety: Safe, .. } => Handling::Encapsulation,
            PatternKind::MethodCaller { .. } => Handling::Delegation,
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.notation())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BasicUnit {
    pub pattern: PatternKind,
    pub callee: UpgNode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caller: Option<UpgNode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ctor: Option<UpgNode>,
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    pub kill_context: BTreeSet<FunctionId>,
}

impl BasicUnit {
    /// 1, 2 or 3 for origin, caller/callee and constructor/caller/callee units.
    pub fn size(&self) -> usize {
        1 + usize::from(self.caller.is_some()) + usize::from(self.ctor.is_some())
    }
}

fn shape(n: &UpgNode) -> CalleeShape {
    if n.kind == NodeKind::M {
        CalleeShape::Method
    } else {
        CalleeShape::Fn
    }
}

/// Pattern of a unit from the kinds and safeties of its nodes.
pub fn classify_pattern(callee: &UpgNode, caller: Option<&UpgNode>, ctor: Option<&UpgNode>) -> PatternKind {
    match (caller, ctor) {
        (None, _) => {
            if callee.kind == NodeKind::M {
                PatternKind::OriginMethod
            } else {
                PatternKind::OriginFn
            }
        }
        (Some(caller), None) => match (caller.safety, shape(callee)) {
            (NodeSafety::Safe, CalleeShape::Fn) => PatternKind::SafeCallerToFn,
            (NodeSafety::Unsafe, CalleeShape::Fn) => PatternKind::UnsafeCallerToFn,
            (NodeSafety::Safe, CalleeShape::Method) => PatternKind::SafeCallerToMethod,
            (NodeSafety::Unsafe, CalleeShape::Method) => PatternKind::UnsafeCallerToMethod,
        },
        (Some(caller), Some(ctor)) => PatternKind::MethodCaller {
            ctor_safety: ctor.safety,
            caller_safety: caller.safety,
            callee_shape: shape(callee),
        },
    }
}

/// Callees of `caller` that form units. A dereference is folded into the
/// other unsafe calls of the same caller when there are any.
fn unit_callees<'g>(g: &'g Upg, caller: &FunctionId) -> Vec<&'g UpgNode> {
    let all = g.callees_of(caller);
    if all.iter().any(|n| !n.func.is_deref()) {
        all.into_iter().filter(|n| !n.func.is_deref()).collect()
    } else {
        all
    }
}

pub fn split_basic_units(g: &Upg, facts: &LibraryFacts) -> Vec<BasicUnit> {
    let mut out = Vec::new();
    for n in g.nodes.values() {
        if !n.external && n.safety.is_unsafe() {
            out.push(BasicUnit {
                pattern: classify_pattern(n, None, None),
                callee: n.clone(),
                caller: None,
                ctor: None,
                kill_context: BTreeSet::new(),
            });
        }
    }
    let callers: BTreeSet<&FunctionId> =
        g.edges.iter().filter(|e| e.kind == crate::upg::EdgeKind::Call).map(|e| &e.src).collect();
    for caller_id in callers {
        let caller = &g.nodes[caller_id];
        let ctors = if caller.kind == NodeKind::M { g.ctors_of(caller_id) } else { Vec::new() };
        let kills = if caller.kind == NodeKind::M {
            facts
                .function(caller_id)
                .and_then(|f| f.owner_type.as_ref())
                .map(|t| facts.mutating_methods_of(t))
                .unwrap_or_default()
        } else {
            BTreeSet::new()
        };
        for callee in unit_callees(g, caller_id) {
            if ctors.is_empty() {
                out.push(BasicUnit {
                    pattern: classify_pattern(callee, Some(caller), None),
                    callee: callee.clone(),
                    caller: Some(caller.clone()),
                    ctor: None,
                    kill_context: kills.clone(),
                });
            }
            for ctor in &ctors {
                out.push(BasicUnit {
                    pattern: classify_pattern(callee, Some(caller), Some(ctor)),
                    callee: callee.clone(),
                    caller: Some(caller.clone()),
                    ctor: Some((*ctor).clone()),
                    kill_context: kills.clone(),
                });
            }
        }
    }
    out
}

/// Set-containment requirement of an audit unit. Renders as ASCII:
/// `+` union, `&` intersection, `-` kill-set subtraction, `<=` containment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditFormula {
    pub lhs: Vec<FunctionId>,
    /// Origin units only require a non-empty RS.
    pub origin: bool,
    pub ctors: Vec<(FunctionId, NodeSafety)>,
    pub caller: Option<(FunctionId, NodeSafety)>,
    pub kills: bool,
}

impl fmt::Display for AuditFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs: Vec<String> = self.lhs.iter().map(|c| format!("RS({c})")).collect();
        if self.origin {
            return write!(f, "{} != {{}}", lhs.join(" + "));
        }
        let mut rhs = Vec::new();
        let ctor_terms: Vec<String> = self
            .ctors
            .iter()
            .map(|(c, s)| match s {
                NodeSafety::Unsafe => format!("(RS({c}) + VS({c}))"),
                NodeSafety::Safe => format!("VS({c})"),
            })
            .collect();
        match ctor_terms.len() {
            0 => {}
            1 => rhs.push(ctor_terms[0].clone()),
            _ => rhs.push(format!("({})", ctor_terms.join(" & "))),
        }
        if let Some((m, s)) = &self.caller {
            match s {
                NodeSafety::Unsafe => rhs.push(format!("RS({m}) + VS({m})")),
                NodeSafety::Safe => rhs.push(format!("VS({m})")),
            }
        }
        let rhs = if rhs.is_empty() { "{}".to_string() } else { rhs.join(" + ") };
        write!(f, "{} <= {rhs}", lhs.join(" + "))?;
        if self.kills {
            f.write_str(" - KS(M)")?;
        }
        Ok(())
    }
}

impl Serialize for AuditFormula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditUnit {
    pub id: String,
    pub component: usize,
    pub callees: BTreeSet<FunctionId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caller: Option<FunctionId>,
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    pub ctors: BTreeSet<FunctionId>,
    #[serde(skip_serializing_if = "BTreeSet::is_empty")]
    pub kill_context: BTreeSet<FunctionId>,
    pub handling: Handling,
    pub members: Vec<BasicUnit>,
    pub formula: AuditFormula,
}

fn unit_id(callees: &BTreeSet<FunctionId>, caller: Option<&FunctionId>, ctors: &BTreeSet<FunctionId>) -> String {
    let mut h = Sha256::new();
    for c in callees {
        h.update(format!("callee:{c}\n"));
    }
    if let Some(c) = caller {
        h.update(format!("caller:{c}\n"));
    }
    for c in ctors {
        h.update(format!("ctor:{c}\n"));
    }
    let digest = h.finalize();
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("au-{hex}")
}

/// The formula of a group of basic units sharing one caller (or a single origin unit).
pub fn formula_of(members: &[BasicUnit]) -> AuditFormula {
    let callees: BTreeSet<&UpgNode> = members.iter().map(|u| &u.callee).collect();
    let caller = members.iter().find_map(|u| u.caller.as_ref());
    let ctors: BTreeSet<&UpgNode> = members.iter().filter_map(|u| u.ctor.as_ref()).collect();
    AuditFormula {
        lhs: callees.iter().map(|n| n.func.clone()).collect(),
        origin: caller.is_none(),
        ctors: ctors.iter().map(|n| (n.func.clone(), n.safety)).collect(),
        caller: caller.map(|n| (n.func.clone(), n.safety)),
        kills: members.iter().any(|u| !u.kill_context.is_empty()),
    }
}

/// Units with the same caller merge into one audit unit: a function caller
/// with several callees, or a method caller across all of its constructors.
pub fn merge_units(units: &[BasicUnit], component: usize) -> Vec<AuditUnit> {
    let mut groups: BTreeMap<(FunctionId, bool), Vec<BasicUnit>> = BTreeMap::new();
    for u in units {
        let key = match &u.caller {
            None => (u.callee.func.clone(), false),
            Some(c) => (c.func.clone(), true),
        };
        groups.entry(key).or_default().push(u.clone());
    }
    groups
        .into_values()
        .map(|mut members| {
            members.sort();
            let formula = formula_of(&members);
            let callees: BTreeSet<FunctionId> = members.iter().map(|u| u.callee.func.clone()).collect();
            let caller = members.iter().find_map(|u| u.caller.as_ref().map(|c| c.func.clone()));
            let ctors: BTreeSet<FunctionId> =
                members.iter().filter_map(|u| u.ctor.as_ref().map(|c| c.func.clone())).collect();
            let kill_context = members.iter().flat_map(|u| u.kill_context.iter().cloned()).collect();
            let handling = members.iter().map(|u| u.pattern.handling()).max().unwrap_or(Handling::Origin);
            AuditUnit {
                id: unit_id(&callees, caller.as_ref(), &ctors),
                component,
                callees,
                caller,
                ctors,
                kill_context,
                handling,
                members,
                formula,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub components: usize,
    pub basic_units: Vec<BasicUnit>,
    pub audit_units: Vec<AuditUnit>,
}

impl Partition {
    pub fn count_by_size(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for u in &self.basic_units {
            c[u.size() - 1] += 1;
        }
        c
    }

    /// Basic-unit count per refined pattern, including zero counts.
    pub fn histogram(&self) -> BTreeMap<String, usize> {
        let mut h: BTreeMap<String, usize> = PatternKind::all().into_iter().map(|p| (p.notation(), 0)).collect();
        for u in &self.basic_units {
            *h.entry(u.pattern.notation()).or_default() += 1;
        }
        h
    }
}

pub fn partition(g: &Upg, facts: &LibraryFacts) -> Partition {
    let comps = components(g);
    let mut p = Partition { components: comps.len(), ..Default::default() };
    for (i, c) in comps.iter().enumerate() {
        let units = split_basic_units(c, facts);
        p.audit_units.extend(merge_units(&units, i));
        p.basic_units.extend(units);
    }
    p
}
