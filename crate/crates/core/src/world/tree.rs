//! Object type hierarchy.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::sym::Sym;

pub const ROOT_TYPE: &str = "thing";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("type `{0}` declared twice")]
    DuplicateType(String),
    #[error("type `{child}` names unknown parent `{parent}`")]
    UnknownParent { child: String, parent: String },
    #[error("the root type `thing` cannot have a parent")]
    RootWithParent,
}

/// Single-rooted tree of type names. Insertion requires the parent to exist,
/// so cycles cannot be built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeTree {
    parents: BTreeMap<Sym, Option<Sym>>,
}

impl Default for TypeTree {
    fn default() -> Self {
        Self::new()
    }
}

impl TypeTree {
    pub fn new() -> Self {
        let mut parents = BTreeMap::new();
        parents.insert(Sym::new(ROOT_TYPE), None);
        TypeTree { parents }
    }

    pub fn add(&mut self, name: &str, parent: &str) -> Result<(), TreeError> {
        if name == ROOT_TYPE {
            return Err(TreeError::RootWithParent);
        }
        if self.parents.contains_key(name) {
            return Err(TreeError::DuplicateType(name.to_string()));
        }
        let parent = self.sym(parent).ok_or_else(|| TreeError::UnknownParent {
            child: name.to_string(),
            parent: parent.to_string(),
        })?;
        self.parents.insert(Sym::new(name), Some(parent));
        Ok(())
    }

    /// Builds a tree from `(child, parent)` edges given in any order.
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self, TreeError> {
        let mut tree = TypeTree::new();
        let mut pending: Vec<(&str, &str)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (c, p) in edges {
            if c == ROOT_TYPE {
                return Err(TreeError::RootWithParent);
            }
            if !seen.insert(c) {
                return Err(TreeError::DuplicateType(c.to_string()));
            }
            pending.push((c, p));
        }
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for (c, p) in pending {
                if tree.contains(p) {
                    tree.add(c, p)?;
                } else {
                    rest.push((c, p));
                }
            }
            if rest.len() == before {
                let (c, p) = rest[0];
                return Err(TreeError::UnknownParent {
                    child: c.to_string(),
                    parent: p.to_string(),
                });
            }
            pending = rest;
        }
        Ok(tree)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.parents.contains_key(name)
    }

    /// The stored symbol for a type name.
    pub fn sym(&self, name: &str) -> Option<Sym> {
        self.parents.get_key_value(name).map(|(k, _)| k.clone())
    }

    pub fn parent(&self, name: &str) -> Option<&Sym> {
        self.parents.get(name).and_then(Option::as_ref)
    }

    /// `name` followed by each ancestor up to the root.
    pub fn ancestors<'a>(&'a self, name: &str) -> impl Iterator<Item = &'a Sym> + 'a {
        let start = self.parents.get_key_value(name).map(|(k, _)| k);
        core::iter::successors(start, move |t| self.parent(t))
    }

    /// True if `name` equals `ancestor` or lies below it.
    pub fn is_a(&self, name: &str, ancestor: &str) -> bool {
        self.ancestors(name).any(|t| t == ancestor)
    }

    pub fn depth(&self, name: &str) -> usize {
        self.ancestors(name).count().saturating_sub(1)
    }

    pub fn lca(&self, a: &str, b: &str) -> Option<Sym> {
        let mine: BTreeSet<&Sym> = self.ancestors(a).collect();
        if mine.is_empty() {
            return None;
        }
        self.ancestors(b).find(|t| mine.contains(t)).cloned()
    }

    pub fn children(&self, name: &str) -> Vec<Sym> {
        self.parents
            .iter()
            .filter(|(_, p)| p.as_ref().is_some_and(|p| p == name))
            .map(|(c, _)| c.clone())
            .collect()
    }

    /// Types sharing `name`'s parent, excluding `name` itself.
    pub fn siblings(&self, name: &str) -> Vec<Sym> {
        match self.parent(name) {
            Some(p) => self.children(p).into_iter().filter(|c| c != name).collect(),
            None => Vec::new(),
        }
    }

    /// `(child, parent)` edges, sorted by child.
    pub fn edges(&self) -> impl Iterator<Item = (&Sym, &Sym)> {
        self.parents.iter().filter_map(|(c, p)| p.as_ref().map(|p| (c, p)))
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kitchen() -> TypeTree {
        TypeTree::from_edges([
            ("liquid", "item"),
            ("item", "thing"),
            ("milk", "liquid"),
            ("water", "liquid"),
            ("tea", "liquid"),
            ("container", "item"),
            ("cup", "container"),
        ])
        .unwrap()
    }

    #[test]
    fn order_independent_construction() {
        let t = kitchen();
        assert!(t.is_a("milk", "item"));
        assert!(t.is_a("milk", "thing"));
        assert!(!t.is_a("cup", "liquid"));
        assert_eq!(t.depth("milk"), 3);
    }

    #[test]
    fn lca_and_siblings() {
        let t = kitchen();
        assert_eq!(t.lca("milk", "water").unwrap(), "liquid");
        assert_eq!(t.lca("milk", "cup").unwrap(), "item");
        assert_eq!(t.lca("milk", "milk").unwrap(), "milk");
        assert_eq!(t.lca("milk", "nope"), None);
        let s: Vec<_> = t.siblings("milk").iter().map(|s| s.to_string()).collect();
        assert_eq!(s, ["tea", "water"]);
        assert!(t.siblings(ROOT_TYPE).is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            TypeTree::from_edges([("a", "b"), ("b", "a")]),
            Err(TreeError::UnknownParent { .. })
        ));
        assert!(matches!(
            TypeTree::from_edges([("a", "thing"), ("a", "thing")]),
            Err(TreeError::DuplicateType(_))
        ));
        assert!(matches!(TypeTree::from_edges([("thing", "a")]), Err(TreeError::RootWithParent)));
    }
}
