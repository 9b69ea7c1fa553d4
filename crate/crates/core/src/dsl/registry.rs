use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

use super::ast::{SpExpr, Usage};
use super::parser::{parse_sp, SyntaxError};

const BUILTIN_REGISTRY: &str = include_str!("../../data/registry.json");
const BUILTIN_IMPLICATIONS: &str = include_str!("../../data/implications.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Layout,
    Pointer,
    Content,
    Alias,
    Misc,
    Compound,
}

#[derive(Debug, Clone)]
pub struct TagDef {
    pub name: String,
    pub category: Category,
    /// First entry is the default when an annotation carries no suffix.
    pub usage: Vec<Usage>,
    pub params: Vec<String>,
    pub min_arity: usize,
    pub max_arity: usize,
    pub expansion: Option<SpExpr>,
    /// Listed in negated form, e.g. `!Null`.
    pub written_negated: bool,
}

impl TagDef {
    pub fn is_compound(&self) -> bool {
        self.expansion.is_some()
    }

    pub fn default_usage(&self) -> Usage {
        self.usage.first().copied().unwrap_or(Usage::Precond)
    }

    pub fn accepts_arity(&self, n: usize) -> bool {
        (self.min_arity..=self.max_arity).contains(&n)
    }

    /// Signature as written in the tag table, e.g. `!Null(p)`.
    pub fn signature(&self) -> String {
        format!(
            "{}{}({})",
            if self.written_negated { "!" } else { "" },
            self.name,
            self.params.join(", ")
        )
    }
}

/// `from ⇒ to`, where `map` rebuilds the implied term's arguments from the
/// premise (`$i` is the premise's i-th argument, anything else is literal).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
pub struct Implication {
    pub from: String,
    pub to: String,
    pub map: Vec<String>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("malformed registry data: {0}")]
    Json(#[from] serde_json::Error),
    #[error("expansion of `{tag}` does not parse: {source}")]
    BadExpansion {
        tag: String,
        #[source]
        source: SyntaxError,
    },
    #[error("tag `{0}` is declared compound without an expansion, or primitive with one")]
    CategoryMismatch(String),
    #[error("expansion of `{tag}` refers to unknown tag `{unknown}`")]
    UnknownInExpansion { tag: String, unknown: String },
    #[error("implication refers to unknown tag `{0}`")]
    UnknownInImplication(String),
    #[error("duplicate tag `{0}`")]
    Duplicate(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTag {
    name: String,
    category: Category,
    usage: Vec<Usage>,
    params: Vec<String>,
    #[serde(default)]
    min_arity: Option<usize>,
    #[serde(default)]
    expansion: Option<String>,
    #[serde(default)]
    written_negated: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    tags: Vec<RawTag>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImplications {
    implications: Vec<Implication>,
}

#[derive(Debug, Clone)]
pub struct Registry {
    tags: BTreeMap<String, TagDef>,
    /// Transitively closed, excluding reflexive pairs.
    implications: Vec<Implication>,
}

impl Registry {
    pub fn builtin() -> &'static Registry {
        static REG: OnceLock<Registry> = OnceLock::new();
        REG.get_or_init(|| {
            Registry::from_json(BUILTIN_REGISTRY, BUILTIN_IMPLICATIONS)
                .expect("bundled registry is well-formed")
        })
    }

    pub fn from_json(tags: &str, implications: &str) -> Result<Registry, RegistryError> {
        let raw: RawRegistry = serde_json::from_str(tags)?;
        let mut out = BTreeMap::new();
        for t in raw.tags {
            if (t.category == Category::Compound) != t.expansion.is_some() {
                return Err(RegistryError::CategoryMismatch(t.name));
            }
            let expansion = match &t.expansion {
                Some(text) => Some(parse_sp(text).map_err(|source| RegistryError::BadExpansion {
                    tag: t.name.clone(),
                    source,
                })?),
                None => None,
            };
            let def = TagDef {
                min_arity: t.min_arity.unwrap_or(t.params.len()),
                max_arity: t.params.len(),
                name: t.name.clone(),
                category: t.category,
                usage: t.usage,
                params: t.params,
                expansion,
                written_negated: t.written_negated,
            };
            if out.insert(t.name.clone(), def).is_some() {
                return Err(RegistryError::Duplicate(t.name));
            }
        }
        for def in out.values() {
            if let Some(e) = &def.expansion {
                for term in e.terms() {
                    if !out.contains_key(&term.tag) {
                        return Err(RegistryError::UnknownInExpansion {
                            tag: def.name.clone(),
                            unknown: term.tag.clone(),
                        });
                    }
                }
            }
        }
        let raw: RawImplications = serde_json::from_str(implications)?;
        for imp in &raw.implications {
            for name in [&imp.from, &imp.to] {
                if !out.contains_key(name.trim_start_matches('!')) {
                    return Err(RegistryError::UnknownInImplication(name.clone()));
                }
            }
        }
        Ok(Registry { tags: out, implications: close_implications(raw.implications) })
    }

    pub fn get(&self, name: &str) -> Option<&TagDef> {
        self.tags.get(name)
    }

    pub fn tags(&self) -> impl Iterator<Item = &TagDef> {
        self.tags.values()
    }

    pub fn implications(&self) -> &[Implication] {
        &self.implications
    }
}

/// Compose implications until no new (from, to) pair appears.
fn close_implications(base: Vec<Implication>) -> Vec<Implication> {
    let mut all = base;
    loop {
        let mut added = Vec::new();
        for a in &all {
            for b in &all {
                if a.to != b.from || a.from == b.to {
                    continue;
                }
                let map = b
                    .map
                    .iter()
                    .map(|m| match placeholder(m) {
                        Some(i) => a.map.get(i).cloned().unwrap_or_else(|| m.clone()),
                        None => m.clone(),
                    })
                    .collect();
                let c = Implication { from: a.from.clone(), to: b.to.clone(), map };
                if !all.iter().chain(added.iter()).any(|x: &Implication| x.from == c.from && x.to == c.to) {
                    added.push(c);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        all.extend(added);
    }
    all.sort();
    all
}

pub(crate) fn placeholder(s: &str) -> Option<usize> {
    s.strip_prefix('$')?.parse().ok()
}
