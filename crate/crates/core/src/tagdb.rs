//! Declared safety properties of external APIs, keyed by path.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{coarse_all, parse_sp, Registry, SpExpr, SyntaxError, TagSet};
use crate::facts::{FunctionId, ModuleClass, ParamClass, RetClass};

const BUNDLED: &str = include_str!("../data/std_tags.json");

#[derive(Debug, Error)]
pub enum TagDbError {
    #[error("malformed tag database: {0}")]
    Json(#[from] serde_json::Error),
    #[error("tag database entry `{id}`: {source}")]
    Syntax {
        id: String,
        #[source]
        source: SyntaxError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagDbEntry {
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub params: Vec<ParamClass>,
    #[serde(default)]
    pub ret: RetClass,
    #[serde(default)]
    pub module_class: ModuleClass,
}

#[derive(Debug, Clone)]
pub struct ExternalApi {
    pub id: FunctionId,
    pub entry: TagDbEntry,
    pub exprs: Vec<SpExpr>,
}

impl ExternalApi {
    pub fn name(&self) -> &str {
        self.id.short_name()
    }

    pub fn has_param(&self, class: ParamClass) -> bool {
        self.entry.params.contains(&class)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TagDatabase {
    entries: BTreeMap<FunctionId, ExternalApi>,
}

impl TagDatabase {
    pub fn bundled() -> TagDatabase {
        TagDatabase::from_json(BUNDLED).expect("bundled tag database is well-formed")
    }

    pub fn from_json(text: &str) -> Result<TagDatabase, TagDbError> {
        let raw: BTreeMap<String, TagDbEntry> = serde_json::from_str(text)?;
        let mut entries = BTreeMap::new();
        for (id, entry) in raw {
            let exprs = entry
                .tags
                .iter()
                .map(|t| parse_sp(t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| TagDbError::Syntax { id: id.clone(), source })?;
            let id = FunctionId::new(id);
            entries.insert(id.clone(), ExternalApi { id, entry, exprs });
        }
        Ok(TagDatabase { entries })
    }

    /// Later databases override earlier entries with the same key.
    pub fn merge(&mut self, other: TagDatabase) {
        self.entries.extend(other.entries);
    }

    pub fn get(&self, id: &FunctionId) -> Option<&ExternalApi> {
        self.entries.get(id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &FunctionId> {
        self.entries.keys()
    }

    pub fn coarse(&self, id: &FunctionId, reg: &Registry) -> Option<TagSet> {
        self.get(id).map(|api| coarse_all(&api.exprs, reg))
    }

    /// The single entry whose last path segment is `name`, if unambiguous.
    pub fn resolve_method(&self, name: &str) -> Option<&FunctionId> {
        let mut hits = self.entries.keys().filter(|k| k.short_name() == name);
        let first = hits.next()?;
        hits.next().is_none().then_some(first)
    }
}
