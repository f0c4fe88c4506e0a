use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::condition::{AltConditions, ConditionSet, Literal};
use crate::model::GoalModel;
use crate::orgmod::RoutineLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FindingKind {
    /// Some cumulative alternative does not establish the immediate
    /// conditions.
    Entailment,
    /// A child contributes a literal the parent's immediate conditions
    /// contradict.
    Hierarchic,
    /// Two AND-siblings contribute contradicting literals.
    Sibling,
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingKind::Entailment => "entailment",
            FindingKind::Hierarchic => "hierarchic",
            FindingKind::Sibling => "sibling",
        })
    }
}

/// Missing literals for one cumulative alternative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deficiency {
    pub alternative: usize,
    pub missing: ConditionSet,
}

/// One literal contributed by one child.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Contribution {
    pub child: String,
    pub literal: Literal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    /// Stable identifier, e.g. `entailment@G3` or `hierarchic@G:G1:!q`.
    pub id: String,
    pub kind: FindingKind,
    pub at: String,
    /// Indices into the cumulative alternatives of `at` that are affected.
    pub alternatives: Vec<usize>,
    /// Children involved (hierarchic: the offending child; sibling: both).
    pub children: Vec<String>,
    /// Literals in conflict (hierarchic: the child literal; sibling: both).
    pub conflicting: ConditionSet,
    /// Immediate conditions of `at` that are not established.
    pub missing: ConditionSet,
    /// Per-alternative deficiencies (entailment only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deficiencies: Vec<Deficiency>,
    /// Both sides of a sibling conflict, in child declaration order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contributions: Vec<Contribution>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FindingKind::Entailment => write!(
                f,
                "{}: entailment fails at {} on alternative(s) {:?}; missing {}",
                self.id, self.at, self.alternatives, self.missing
            ),
            FindingKind::Hierarchic => write!(
                f,
                "{}: {} contributes {} which contradicts IE({}); missing {}",
                self.id,
                self.children.join(","),
                self.conflicting,
                self.at,
                self.missing
            ),
            FindingKind::Sibling => {
                let parts: Vec<String> = self
                    .contributions
                    .iter()
                    .map(|c| format!("({},{})", c.child, c.literal))
                    .collect();
                write!(
                    f,
                    "{}: siblings under {} conflict: {}",
                    self.id,
                    self.at,
                    parts.join(" vs ")
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub at: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub findings: Vec<Finding>,
    pub warnings: Vec<Warning>,
}

impl ConflictReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Finding> {
        self.findings.iter().find(|f| f.id == id)
    }

    pub fn at<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Finding> + 'a {
        self.findings.iter().filter(move |f| f.at == node)
    }
}

/// A model annotated with cumulative conditions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedModel {
    #[serde(skip)]
    pub base: GoalModel,
    pub roots: Vec<String>,
    pub ce: BTreeMap<String, AltConditions>,
    /// For each artefact, the OR child each cumulative alternative came
    /// through (`None` unless the artefact is an OR decomposition).
    pub provenance: BTreeMap<String, Vec<Option<String>>>,
    /// OR choices behind each cumulative alternative.
    pub choices: BTreeMap<String, Vec<BTreeMap<String, String>>>,
    pub scope: Option<RoutineLabel>,
}

impl AnnotatedModel {
    pub fn ce(&self, id: &str) -> Option<&AltConditions> {
        self.ce.get(id)
    }

    /// Indices of the alternatives of `id` that came through OR child `child`.
    pub fn alternatives_via(&self, id: &str, child: &str) -> Vec<usize> {
        self.provenance
            .get(id)
            .map(|p| {
                p.iter()
                    .enumerate()
                    .filter(|(_, c)| c.as_deref() == Some(child))
                    .map(|(i, _)| i)
                    .collect()
            })
            .unwrap_or_default()
    }
}
