//! Unsafety propagation graph: call edges into unsafe callees plus
//! object-flow edges from constructors to the methods of their type.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use serde::Serialize;

use crate::facts::{Callee, FnKind, FunctionFact, FunctionId, LibraryFacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodeKind {
    /// Free function, static method or external API.
    F,
    /// Dynamic (self-taking) method.
    M,
    C,
    #[serde(rename = "C_literal")]
    CLiteral,
}

impl NodeKind {
    fn of(kind: FnKind) -> NodeKind {
        match kind {
            FnKind::Function | FnKind::StaticMethod => NodeKind::F,
            FnKind::DynMethod => NodeKind::M,
            FnKind::Constructor => NodeKind::C,
            FnKind::LiteralConstructor => NodeKind::CLiteral,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::F => "F",
            NodeKind::M => "M",
            NodeKind::C => "C",
            NodeKind::CLiteral => "C_literal",
        }
    }

    pub fn is_constructor(self) -> bool {
        matches!(self, NodeKind::C | NodeKind::CLiteral)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum NodeSafety {
    #[serde(rename = "s")]
    Safe,
    #[serde(rename = "u")]
    Unsafe,
}

impl NodeSafety {
    pub fn is_unsafe(self) -> bool {
        self == NodeSafety::Unsafe
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeSafety::Safe => "s",
            NodeSafety::Unsafe => "u",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct UpgNode {
    pub func: FunctionId,
    pub kind: NodeKind,
    pub safety: NodeSafety,
    pub external: bool,
}

impl UpgNode {
    pub fn local(f: &FunctionFact) -> UpgNode {
        UpgNode {
            func: f.id.clone(),
            kind: NodeKind::of(f.kind),
            safety: if f.is_unsafe() { NodeSafety::Unsafe } else { NodeSafety::Safe },
            external: false,
        }
    }

    /// External callees are unsafe by virtue of appearing in an unsafe call site.
    pub fn external(id: FunctionId) -> UpgNode {
        UpgNode { func: id, kind: NodeKind::F, safety: NodeSafety::Unsafe, external: true }
    }
}

impl fmt::Display for UpgNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{},{}]", self.func, self.kind.as_str(), self.safety.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Call,
    ObjectFlow,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct UpgEdge {
    pub src: FunctionId,
    pub dst: FunctionId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Upg {
    pub nodes: BTreeMap<FunctionId, UpgNode>,
    pub edges: BTreeSet<UpgEdge>,
}

impl Upg {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &FunctionId) -> Option<&UpgNode> {
        self.nodes.get(id)
    }

    pub fn has_edge(&self, src: &str, dst: &str, kind: EdgeKind) -> bool {
        self.edges.contains(&UpgEdge { src: src.into(), dst: dst.into(), kind })
    }

    /// Unsafe callees of `caller`, in id order.
    pub fn callees_of(&self, caller: &FunctionId) -> Vec<&UpgNode> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Call && &e.src == caller)
            .filter_map(|e| self.nodes.get(&e.dst))
            .collect()
    }

    /// Constructors with an object-flow edge into `method`, in id order.
    pub fn ctors_of(&self, method: &FunctionId) -> Vec<&UpgNode> {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::ObjectFlow && &e.dst == method)
            .filter_map(|e| self.nodes.get(&e.src))
            .collect()
    }

    fn add_node(&mut self, n: UpgNode) {
        self.nodes.entry(n.func.clone()).or_insert(n);
    }
}

/// Resolve a call site to local or external callee ids.
fn resolve_callee(facts: &LibraryFacts, callee: &Callee) -> Vec<FunctionId> {
    match callee {
        Callee::Direct(id) => vec![id.clone()],
        Callee::GenericTraitMethod { trait_name, method } => facts
            .functions
            .iter()
            .filter(|f| f.trait_impl.as_deref() == Some(trait_name.as_str()) && &f.name == method)
            .map(|f| f.id.clone())
            .collect(),
        Callee::FnParam(sig) => facts
            .functions
            .iter()
            .filter(|f| f.signature.as_deref() == Some(sig.as_str()))
            .map(|f| f.id.clone())
            .collect(),
    }
}

pub fn build_upg(facts: &LibraryFacts) -> Upg {
    let mut g = Upg::default();
    let callers: Vec<&FunctionFact> = facts.functions.iter().filter(|f| f.has_unsafe_marker()).collect();
    for caller in &callers {
        g.add_node(UpgNode::local(caller));
        if caller.kind == FnKind::DynMethod {
            let owner = caller.owner_type.as_ref().expect("validated dyn method has an owner");
            let api = facts.api_set_of(owner).unwrap_or_default();
            for ctor in facts.constructors_of(owner) {
                g.add_node(UpgNode::local(ctor));
                for m in &api {
                    if let Some(mf) = facts.function(m) {
                        g.add_node(UpgNode::local(mf));
                    }
                    g.edges.insert(UpgEdge { src: ctor.id.clone(), dst: m.clone(), kind: EdgeKind::ObjectFlow });
                }
            }
        }
        for site in &caller.unsafe_callsites {
            for callee in resolve_callee(facts, &site.callee) {
                let node = match facts.function(&callee) {
                    Some(f) if f.is_unsafe() => UpgNode::local(f),
                    Some(_) => continue,
                    None => UpgNode::external(callee.clone()),
                };
                g.add_node(node);
                g.edges.insert(UpgEdge { src: caller.id.clone(), dst: callee, kind: EdgeKind::Call });
            }
        }
    }
    g
}

/// Weakly connected components, ordered by their least function id.
pub fn components(g: &Upg) -> Vec<Upg> {
    let ids: Vec<&FunctionId> = g.nodes.keys().collect();
    let pos: BTreeMap<&FunctionId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &g.edges {
        let (a, b) = (find(&mut parent, pos[&e.src]), find(&mut parent, pos[&e.dst]));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Upg> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().nodes.insert((*id).clone(), g.nodes[*id].clone());
    }
    for e in &g.edges {
        let root = find(&mut parent, pos[&e.src]);
        groups.get_mut(&root).unwrap().edges.insert(e.clone());
    }
    // roots are the least index in each set, and indices follow id order
    groups.into_values().collect()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn to_dot(g: &Upg) -> String {
    let mut out = String::from("digraph upg {\n");
    for n in g.nodes.values() {
        let shape = if n.external { ", shape=box" } else { "" };
        let _ = writeln!(out, "  {} [label={}{shape}];", quote(n.func.as_str()), quote(&n.to_string()));
    }
    for e in &g.edges {
        let style = match e.kind {
            EdgeKind::Call => "",
            EdgeKind::ObjectFlow => " [style=dashed]",
        };
        let _ = writeln!(out, "  {} -> {}{style};", quote(e.src.as_str()), quote(e.dst.as_str()));
    }
    out.push_str("}\n");
    out
}
