use std::fmt;

use serde::{Deserialize, Serialize};

/// How an annotated property is meant to be read at the call boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Usage {
    Precond,
    Hazard,
    Option,
}

impl Usage {
    pub fn as_str(self) -> &'static str {
        match self {
            Usage::Precond => "precond",
            Usage::Hazard => "hazard",
            Usage::Option => "option",
        }
    }

    pub fn parse(s: &str) -> Option<Usage> {
        match s {
            "precond" | "precondition" => Some(Usage::Precond),
            "hazard" => Some(Usage::Hazard),
            "option" => Some(Usage::Option),
            _ => None,
        }
    }
}

/// Arithmetic sub-language: `add(a, mul(sizeof(T), b))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AriExpr {
    Bin(String, Box<AriExpr>, Box<AriExpr>),
    Uni(String, Box<AriExpr>),
    Var(String),
    Num(String),
    SizeOf(String),
}

pub const BIN_OPS: &[&str] = &["add", "sub", "mul", "div", "rem", "shl", "shr", "min", "max", "pow"];
pub const UNI_OPS: &[&str] = &["neg", "not", "abs"];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ValRange {
    pub lo: String,
    pub hi: String,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SpArg {
    /// Parameter name, possibly a field path such as `self.ptr`.
    FnParId(String),
    /// The return value, written `0`.
    RetVal,
    TypePar(String),
    Ari(AriExpr),
    ValRange(ValRange),
    /// Parenthesized tuple such as `(p, T, len)`.
    AddrRange(Vec<SpArg>),
    /// Anything else, preserved as canonical text.
    Spec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpTerm {
    pub negated: bool,
    pub tag: String,
    pub args: Vec<SpArg>,
    pub usage: Option<Usage>,
}

impl SpTerm {
    pub fn new(negated: bool, tag: impl Into<String>, args: Vec<SpArg>) -> Self {
        SpTerm { negated, tag: tag.into(), args, usage: None }
    }

    /// Tag name with its polarity, e.g. `!Null`.
    pub fn polar_name(&self) -> String {
        if self.negated {
            format!("!{}", self.tag)
        } else {
            self.tag.clone()
        }
    }

    /// Same property ignoring the usage marker.
    pub fn same_property(&self, other: &SpTerm) -> bool {
        self.negated == other.negated && self.tag == other.tag && self.args == other.args
    }

    pub fn args_text(&self) -> String {
        self.args.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SpExpr {
    Term(SpTerm),
    And(Vec<SpExpr>),
    Or(Vec<SpExpr>),
}

impl SpExpr {
    /// Build a conjunction, flattening nested ones and unwrapping singletons.
    pub fn and(parts: Vec<SpExpr>) -> SpExpr {
        Self::join(parts, true)
    }

    pub fn or(parts: Vec<SpExpr>) -> SpExpr {
        Self::join(parts, false)
    }

    fn join(parts: Vec<SpExpr>, conj: bool) -> SpExpr {
        let mut flat = Vec::new();
        for p in parts {
            match (p, conj) {
                (SpExpr::And(inner), true) | (SpExpr::Or(inner), false) => flat.extend(inner),
                (other, _) => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else if conj {
            SpExpr::And(flat)
        } else {
            SpExpr::Or(flat)
        }
    }

    pub fn terms(&self) -> Vec<&SpTerm> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a SpTerm>) {
        match self {
            SpExpr::Term(t) => out.push(t),
            SpExpr::And(xs) | SpExpr::Or(xs) => xs.iter().for_each(|x| x.collect_terms(out)),
        }
    }
}

impl fmt::Display for AriExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AriExpr::Bin(op, a, b) => write!(f, "{op}({a}, {b})"),
            AriExpr::Uni(op, a) => write!(f, "{op}({a})"),
            AriExpr::Var(v) => f.write_str(v),
            AriExpr::Num(n) => f.write_str(n),
            AriExpr::SizeOf(t) => write!(f, "sizeof({t})"),
        }
    }
}

impl fmt::Display for SpArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpArg::FnParId(s) | SpArg::TypePar(s) | SpArg::Spec(s) => f.write_str(s),
            SpArg::RetVal => f.write_str("0"),
            SpArg::Ari(a) => write!(f, "{a}"),
            SpArg::ValRange(r) => write!(
                f,
                "{}{}, {}{}",
                if r.lo_closed { '[' } else { '(' },
                r.lo,
                r.hi,
                if r.hi_closed { ']' } else { ')' }
            ),
            SpArg::AddrRange(items) => {
                f.write_str("(")?;
                for (i, a) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for SpTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        write!(f, "{}({})", self.tag, self.args_text())?;
        if let Some(u) = self.usage {
            write!(f, "@{}", u.as_str())?;
        }
        Ok(())
    }
}

impl fmt::Display for SpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpExpr::Term(t) => write!(f, "{t}"),
            SpExpr::And(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" && ")?;
                    }
                    match x {
                        SpExpr::Or(_) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
            SpExpr::Or(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" || ")?;
                    }
                    match x {
                        SpExpr::And(_) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
        }
    }
}
