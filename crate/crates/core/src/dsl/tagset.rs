use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A tag name with its polarity; `!Null` and `Null` are distinct tags.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tag {
    pub name: String,
    pub negated: bool,
}

impl Tag {
    pub fn new(name: impl Into<String>) -> Tag {
        Tag { name: name.into(), negated: false }
    }

    pub fn not(name: impl Into<String>) -> Tag {
        Tag { name: name.into(), negated: true }
    }

    pub fn flipped(&self) -> Tag {
        Tag { name: self.name.clone(), negated: !self.negated }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        f.write_str(&self.name)
    }
}

impl FromStr for Tag {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Tag, Self::Err> {
        let s = s.trim();
        Ok(match s.strip_prefix('!') {
            Some(rest) => Tag::not(rest.trim()),
            None => Tag::new(s),
        })
    }
}

impl From<&str> for Tag {
    fn from(s: &str) -> Tag {
        s.parse().unwrap()
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Tag, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Tag::from(s.as_str()))
    }
}

/// Parameter-free view of a safety requirement. A tag and its negation never
/// coexist: inserting the opposite polarity of a present tag is ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagSet(BTreeSet<Tag>);

impl TagSet {
    pub fn new() -> TagSet {
        TagSet::default()
    }

    /// Returns false if the tag was already present or its negation blocked it.
    pub fn insert(&mut self, tag: Tag) -> bool {
        if self.0.contains(&tag.flipped()) {
            return false;
        }
        self.0.insert(tag)
    }

    pub fn remove(&mut self, tag: &Tag) -> bool {
        self.0.remove(tag)
    }

    pub fn contains(&self, tag: &Tag) -> bool {
        self.0.contains(tag)
    }

    pub fn contains_name(&self, s: &str) -> bool {
        self.contains(&Tag::from(s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tag> {
        self.0.iter()
    }

    pub fn union(&self, other: &TagSet) -> TagSet {
        let mut out = self.clone();
        out.extend(other.iter().cloned());
        out
    }

    pub fn intersection(&self, other: &TagSet) -> TagSet {
        TagSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn difference(&self, other: &TagSet) -> TagSet {
        TagSet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &TagSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn names(&self) -> Vec<String> {
        self.iter().map(|t| t.to_string()).collect()
    }
}

impl fmt::Display for TagSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("}")
    }
}

impl Extend<Tag> for TagSet {
    fn extend<I: IntoIterator<Item = Tag>>(&mut self, iter: I) {
        for t in iter {
            self.insert(t);
        }
    }
}

impl FromIterator<Tag> for TagSet {
    fn from_iter<I: IntoIterator<Item = Tag>>(iter: I) -> TagSet {
        let mut s = TagSet::new();
        s.extend(iter);
        s
    }
}

impl<'a> FromIterator<&'a str> for TagSet {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> TagSet {
        iter.into_iter().map(Tag::from).collect()
    }
}

impl IntoIterator for TagSet {
    type Item = Tag;
    type IntoIter = std::collections::btree_set::IntoIter<Tag>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a TagSet {
    type Item = &'a Tag;
    type IntoIter = std::collections::btree_set::Iter<'a, Tag>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarity_is_part_of_identity() {
        let s: TagSet = ["!Null", "Align"].into_iter().collect();
        assert!(s.contains_name("!Null"));
        assert!(!s.contains_name("Null"));
        assert_eq!(s.to_string(), "{Align, !Null}");
    }

    #[test]
    fn opposite_polarity_is_rejected() {
        let mut s = TagSet::new();
        assert!(s.insert(Tag::not("Null")));
        assert!(!s.insert(Tag::new("Null")));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn serializes_as_sorted_strings() {
        let s: TagSet = ["Owning", "Align"].into_iter().collect();
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"["Align","Owning"]"#);
    }
}
