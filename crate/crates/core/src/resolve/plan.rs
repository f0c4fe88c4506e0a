use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::condition::{AltConditions, ConditionSet};
use crate::error::{Error, Result};
use crate::model::{validate_model, Artefact, ArtefactKind, GoalModel, LinkKind};

/// One model edit. Edits only add temporary artefacts and links, or strip
/// literals; user-authored artefacts are never removed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    /// Adds a temporary goal to `actor`.
    AddTempGoal {
        id: String,
        name: String,
        actor: String,
        ie: AltConditions,
    },
    /// Adds `child` to the AND-decomposition of `parent`, creating one if
    /// `parent` is a leaf.
    AddAndLink { parent: String, child: String },
    /// Strips `removed` from the immediate conditions of `artefact` and masks
    /// them out of its cumulative conditions.
    ReplaceChildIe {
        artefact: String,
        removed: ConditionSet,
    },
    /// Puts `wrapper` in the place of `child` under `parent`, then makes
    /// `child` the first AND-child of `wrapper`.
    AddParent {
        parent: String,
        wrapper: String,
        child: String,
    },
}

impl std::fmt::Display for Edit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Edit::AddTempGoal { id, name, ie, .. } => {
                write!(f, "add temp goal {id} \"{name}\" ie {ie}")
            }
            Edit::AddAndLink { parent, child } => write!(f, "link {parent} -AND-> {child}"),
            Edit::ReplaceChildIe { artefact, removed } => {
                write!(f, "strip {removed} from {artefact}")
            }
            Edit::AddParent {
                parent,
                wrapper,
                child,
            } => write!(f, "wrap {child} under {wrapper} (in place under {parent})"),
        }
    }
}

/// An ordered list of edits resolving one finding, bound to the model
/// revision it was computed against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefactoringPlan {
    pub base_revision: String,
    pub finding: String,
    pub label: String,
    pub edits: Vec<Edit>,
    pub digest: String,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    base_revision: &'a str,
    finding: &'a str,
    label: &'a str,
    edits: &'a [Edit],
}

impl RefactoringPlan {
    pub fn new(
        base_revision: impl Into<String>,
        finding: impl Into<String>,
        label: impl Into<String>,
        edits: Vec<Edit>,
    ) -> Self {
        let mut plan = RefactoringPlan {
            base_revision: base_revision.into(),
            finding: finding.into(),
            label: label.into(),
            edits,
            digest: String::new(),
        };
        plan.digest = plan.compute_digest();
        plan
    }

    /// Lowercase hex SHA-256 over the plan content (excluding the digest).
    pub fn compute_digest(&self) -> String {
        let input = DigestInput {
            base_revision: &self.base_revision,
            finding: &self.finding,
            label: &self.label,
            edits: &self.edits,
        };
        let bytes = serde_json::to_vec(&input).expect("plan serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Ids of the temporary artefacts this plan introduces.
    pub fn new_ids(&self) -> Vec<&str> {
        self.edits
            .iter()
            .filter_map(|e| match e {
                Edit::AddTempGoal { id, .. } => Some(id.as_str()),
                _ => None,
            })
            .collect()
    }
}

/// Applies a plan to a copy of `model`. The plan must have been computed
/// against this exact revision; the result must validate.
pub fn apply_plan(model: &GoalModel, plan: &RefactoringPlan) -> Result<GoalModel> {
    let actual = model.revision();
    if actual != plan.base_revision {
        return Err(Error::StaleRevision {
            expected: plan.base_revision.clone(),
            actual,
        });
    }
    if plan.compute_digest() != plan.digest {
        return Err(Error::InvalidEdit(format!(
            "digest mismatch for plan on `{}`",
            plan.finding
        )));
    }
    apply_edits(model, &plan.edits)
}

/// Applies edits in order without a revision check.
pub fn apply_edits(model: &GoalModel, edits: &[Edit]) -> Result<GoalModel> {
    let mut next = model.clone();
    for edit in edits {
        apply_one(&mut next, edit)?;
    }
    let diags = validate_model(&next);
    if !diags.is_empty() {
        return Err(Error::Invalid(diags));
    }
    Ok(next)
}

fn require<'m>(model: &'m GoalModel, id: &str) -> Result<&'m Artefact> {
    model
        .artefact(id)
        .ok_or_else(|| Error::UnknownId(id.to_string()))
}

fn apply_one(model: &mut GoalModel, edit: &Edit) -> Result<()> {
    match edit {
        Edit::AddTempGoal {
            id,
            name,
            actor,
            ie,
        } => {
            if model.artefacts.contains_key(id) {
                return Err(Error::IdCollision(id.clone()));
            }
            model.add_artefact(Artefact {
                id: id.clone(),
                kind: ArtefactKind::Goal,
                name: name.clone(),
                actor: actor.clone(),
                ie: ie.clone(),
                mask: ConditionSet::new(),
                temp: true,
            })
        }
        Edit::AddAndLink { parent, child } => {
            require(model, parent)?;
            require(model, child)?;
            if model.reaches(child, parent) {
                return Err(Error::InvalidEdit(format!(
                    "linking {parent} -> {child} would create a cycle"
                )));
            }
            if let Some(link) = model.decompositions.get_mut(parent) {
                if link.kind == LinkKind::Or {
                    if link.children.len() > 1 {
                        return Err(Error::MixedKinds(parent.clone()));
                    }
                    // A single-child OR carries no choice; it becomes an AND.
                    link.kind = LinkKind::And;
                }
            }
            model.add_link(parent, LinkKind::And, [child.clone()])
        }
        Edit::ReplaceChildIe { artefact, removed } => {
            let art = model
                .artefacts
                .get_mut(artefact)
                .ok_or_else(|| Error::UnknownId(artefact.clone()))?;
            art.ie = art.ie.without(removed);
            art.mask.extend(removed);
            Ok(())
        }
        Edit::AddParent {
            parent,
            wrapper,
            child,
        } => {
            require(model, wrapper)?;
            require(model, child)?;
            if !model.is_leaf(wrapper) {
                return Err(Error::InvalidEdit(format!(
                    "wrapper {wrapper} already has children"
                )));
            }
            let link = model
                .decompositions
                .get_mut(parent)
                .ok_or_else(|| Error::InvalidEdit(format!("{parent} has no decomposition")))?;
            let slot = link
                .children
                .iter()
                .position(|c| c == child)
                .ok_or_else(|| Error::InvalidEdit(format!("{child} is not a child of {parent}")))?;
            if link.children.contains(wrapper) {
                return Err(Error::InvalidEdit(format!(
                    "{wrapper} is already a child of {parent}"
                )));
            }
            link.children[slot] = wrapper.clone();
            model.add_link(wrapper, LinkKind::And, [child.clone()])
        }
    }
}

/// Hands out `STEM_<n>` ids, continuing after the largest `n` already used
/// for that stem.
#[derive(Clone, Debug, Default)]
pub(crate) struct IdAllocator {
    taken: BTreeSet<String>,
}

impl IdAllocator {
    pub(crate) fn new(model: &GoalModel) -> Self {
        IdAllocator {
            taken: model.artefacts.keys().cloned().collect(),
        }
    }

    pub(crate) fn next(&mut self, stem: &str) -> String {
        let prefix = format!("{stem}_");
        let max = self
            .taken
            .iter()
            .filter_map(|id| id.strip_prefix(&prefix)?.parse::<u64>().ok())
            .max()
            .unwrap_or(0);
        let id = format!("{prefix}{}", max + 1);
        self.taken.insert(id.clone());
        id
    }
}

/// A readable name for a carrier goal: `Consulted_Specialist` becomes
/// "Consult Specialist"; anything else is spelled out.
pub(crate) fn carrier_name(lits: &ConditionSet) -> String {
    let mut it = lits.iter();
    if let (Some(l), None) = (it.next(), it.next()) {
        let words: Vec<&str> = l.atom.split('_').filter(|w| !w.is_empty()).collect();
        if l.positive && words.len() >= 2 {
            let mut out = vec![imperative(words[0])];
            out.extend(words[1..].iter().map(|w| w.to_string()));
            return out.join(" ");
        }
    }
    let parts: Vec<String> = lits.iter().map(ToString::to_string).collect();
    format!("Establish {}", parts.join(", "))
}

/// Strips a past-tense `-ed` from a verb: `Consulted` → `Consult`,
/// `Provided` → `Provide`.
fn imperative(word: &str) -> String {
    let Some(stem) = word.strip_suffix("ed") else {
        return word.to_string();
    };
    let is_consonant = |c: char| c.is_ascii_alphabetic() && !"aeiouAEIOU".contains(c);
    let tail: Vec<char> = stem.chars().rev().take(2).collect();
    if tail.len() == 2 && tail.iter().all(|&c| is_consonant(c)) {
        stem.to_string()
    } else {
        word[..word.len() - 1].to_string()
    }
}
