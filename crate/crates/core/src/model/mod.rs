//! Goal-model data structures.
//!
//! A [`GoalModel`] holds actors, their goal/task/resource artefacts, AND/OR
//! decomposition links (at most one per parent) and cross-actor dependency
//! links between leaves. Decomposition links may share children, so the
//! structure is a DAG rather than a strict forest.

mod document;
mod dsl;
mod validate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::condition::{AltConditions, ConditionSet};

pub use document::{
    from_document_json, to_document_json, ActorRecord, ModelDocument, DOCUMENT_FORMAT,
};
pub use dsl::{parse_model, serialize_model};
pub use validate::{validate_model, Diagnostic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtefactKind {
    Goal,
    Task,
    Resource,
}

impl ArtefactKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ArtefactKind::Goal => "goal",
            ArtefactKind::Task => "task",
            ArtefactKind::Resource => "resource",
        }
    }
}

impl fmt::Display for ArtefactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artefact {
    pub id: String,
    pub kind: ArtefactKind,
    pub name: String,
    pub actor: String,
    pub ie: AltConditions,
    /// Literals suppressed from this artefact's cumulative conditions. Set
    /// when a consistency resolution strips a literal that reaches the
    /// artefact from below.
    #[serde(default, skip_serializing_if = "ConditionSet::is_empty")]
    pub mask: ConditionSet,
    #[serde(default)]
    pub temp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LinkKind {
    And,
    Or,
}

impl LinkKind {
    pub fn keyword(self) -> &'static str {
        match self {
            LinkKind::And => "and",
            LinkKind::Or => "or",
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::And => "AND",
            LinkKind::Or => "OR",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionLink {
    pub parent: String,
    pub kind: LinkKind,
    pub children: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub actor: String,
    pub artefact: String,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.actor, self.artefact)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependencyLink {
    pub depender: Endpoint,
    pub dependee: Endpoint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actor {
    pub id: String,
    pub name: String,
    pub members: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GoalModel {
    pub actors: BTreeMap<String, Actor>,
    pub artefacts: BTreeMap<String, Artefact>,
    /// Keyed by parent id: each artefact has at most one decomposition.
    pub decompositions: BTreeMap<String, DecompositionLink>,
    pub dependencies: BTreeSet<DependencyLink>,
}

impl GoalModel {
    pub fn artefact(&self, id: &str) -> Option<&Artefact> {
        self.artefacts.get(id)
    }

    pub fn link(&self, id: &str) -> Option<&DecompositionLink> {
        self.decompositions.get(id)
    }

    pub fn children(&self, id: &str) -> &[String] {
        self.decompositions
            .get(id)
            .map(|l| l.children.as_slice())
            .unwrap_or(&[])
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.children(id).is_empty()
    }

    /// Parents of `id`, ordered by parent id.
    pub fn parents(&self, id: &str) -> Vec<&str> {
        self.decompositions
            .values()
            .filter(|l| l.children.iter().any(|c| c == id))
            .map(|l| l.parent.as_str())
            .collect()
    }

    /// The artefact `id` depends on, if any.
    pub fn dependee_of(&self, id: &str) -> Option<&str> {
        self.dependencies
            .iter()
            .find(|d| d.depender.artefact == id)
            .map(|d| d.dependee.artefact.as_str())
    }

    /// Artefacts without a decomposition parent, ordered by id.
    pub fn roots(&self) -> Vec<&str> {
        let children: BTreeSet<&str> = self
            .decompositions
            .values()
            .flat_map(|l| l.children.iter().map(String::as_str))
            .collect();
        self.artefacts
            .keys()
            .map(String::as_str)
            .filter(|id| !children.contains(id))
            .collect()
    }

    /// True when `to` is reachable from `from` along decomposition links
    /// (reflexive).
    pub fn reaches(&self, from: &str, to: &str) -> bool {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                queue.extend(self.children(n).iter().map(String::as_str));
            }
        }
        false
    }

    /// Artefacts reachable from `root` along decomposition links, including
    /// `root` itself.
    pub fn subtree(&self, root: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![root.to_string()];
        while let Some(n) = stack.pop() {
            if seen.insert(n.clone()) {
                stack.extend(self.children(&n).iter().cloned());
            }
        }
        seen
    }

    /// Lowercase hex SHA-256 of the canonical DSL serialization.
    pub fn revision(&self) -> String {
        hex::encode(Sha256::digest(serialize_model(self).as_bytes()))
    }

    /// Inserts an actor, keeping membership consistent.
    pub fn add_actor(&mut self, id: impl Into<String>, name: impl Into<String>) {
        let id = id.into();
        self.actors.entry(id.clone()).or_insert_with(|| Actor {
            id,
            name: name.into(),
            members: BTreeSet::new(),
        });
    }

    /// Inserts an artefact into an existing actor.
    pub fn add_artefact(&mut self, artefact: Artefact) -> crate::Result<()> {
        if self.artefacts.contains_key(&artefact.id) {
            return Err(crate::Error::DuplicateId(artefact.id));
        }
        let actor = self
            .actors
            .get_mut(&artefact.actor)
            .ok_or_else(|| crate::Error::UnknownId(artefact.actor.clone()))?;
        actor.members.insert(artefact.id.clone());
        self.artefacts.insert(artefact.id.clone(), artefact);
        Ok(())
    }

    /// Adds children under `parent` with the given kind, appending to an
    /// existing link of the same kind.
    pub fn add_link(
        &mut self,
        parent: &str,
        kind: LinkKind,
        children: impl IntoIterator<Item = String>,
    ) -> crate::Result<()> {
        if !self.artefacts.contains_key(parent) {
            return Err(crate::Error::UnknownId(parent.to_string()));
        }
        let children: Vec<String> = children.into_iter().collect();
        for c in &children {
            if !self.artefacts.contains_key(c) {
                return Err(crate::Error::UnknownId(c.clone()));
            }
        }
        let link = self
            .decompositions
            .entry(parent.to_string())
            .or_insert_with(|| DecompositionLink {
                parent: parent.to_string(),
                kind,
                children: Vec::new(),
            });
        if link.kind != kind {
            return Err(crate::Error::MixedKinds(parent.to_string()));
        }
        for c in children {
            if !link.children.contains(&c) {
                link.children.push(c);
            }
        }
        Ok(())
    }
}

/// Decomposition marker used by path traversal: `X` for OR nodes and `A` for
/// AND nodes with at least two children; single-child links and leaves carry
/// no marker.
pub fn branching_kind(model: &GoalModel, id: &str) -> Option<LinkKind> {
    model
        .link(id)
        .filter(|l| l.children.len() >= 2)
        .map(|l| l.kind)
}
