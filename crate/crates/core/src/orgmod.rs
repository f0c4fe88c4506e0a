//! Enumeration of OR-refined goal models (ORGMods).
//!
//! Extraction runs in three stages: depth-first path traversal with `X`/`A`
//! markers, segmentation of the paths into decomposition sequence objects
//! (one per marked artefact), and a child-first merge of those objects into
//! routine labels. Each label fixes one child at every OR decomposition it
//! reaches and records the non-selected children in an exclusion set.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{branching_kind, GoalModel, LinkKind};

/// Default limit on labels (and on reconciled alternatives per node).
pub const DEFAULT_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Marker {
    /// OR decomposition with two or more children.
    X,
    /// AND decomposition with two or more children.
    A,
    /// Leaf or single-child link.
    None,
}

impl Marker {
    fn of(model: &GoalModel, id: &str) -> Self {
        match branching_kind(model, id) {
            Some(LinkKind::Or) => Marker::X,
            Some(LinkKind::And) => Marker::A,
            None => Marker::None,
        }
    }

    pub fn is_branching(self) -> bool {
        self != Marker::None
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathNode {
    pub id: String,
    pub marker: Marker,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalPath {
    pub nodes: Vec<PathNode>,
}

impl fmt::Display for TraversalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&n.id)?;
            match n.marker {
                Marker::X => f.write_str("(X)")?,
                Marker::A => f.write_str("(A)")?,
                Marker::None => {}
            }
        }
        f.write_str("⟩")
    }
}

/// Every root-to-leaf path, children visited in declaration order.
pub fn traverse_paths(model: &GoalModel, root: &str) -> Result<Vec<TraversalPath>> {
    traverse_paths_capped(model, root, usize::MAX)
}

pub fn traverse_paths_capped(
    model: &GoalModel,
    root: &str,
    cap: usize,
) -> Result<Vec<TraversalPath>> {
    if model.artefact(root).is_none() {
        return Err(Error::UnknownId(root.to_string()));
    }
    let mut out = Vec::new();
    let mut stack = vec![PathNode {
        id: root.to_string(),
        marker: Marker::of(model, root),
    }];
    walk(model, &mut stack, &mut out, cap)?;
    Ok(out)
}

fn walk(
    model: &GoalModel,
    stack: &mut Vec<PathNode>,
    out: &mut Vec<TraversalPath>,
    cap: usize,
) -> Result<()> {
    let last = stack.last().expect("non-empty path").id.clone();
    let children = model.children(&last);
    if children.is_empty() {
        if out.len() >= cap {
            return Err(Error::CapExceeded { cap, at: last });
        }
        out.push(TraversalPath {
            nodes: stack.clone(),
        });
        return Ok(());
    }
    for c in children {
        if stack.iter().any(|n| n.id == *c) {
            return Err(Error::InvalidEdit(format!(
                "decomposition cycle through {c}"
            )));
        }
        stack.push(PathNode {
            id: c.clone(),
            marker: Marker::of(model, c),
        });
        walk(model, stack, out, cap)?;
        stack.pop();
    }
    Ok(())
}

/// Decomposition sequence object for one marked artefact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dso {
    pub root: String,
    pub kind: LinkKind,
    /// One run per child: starts at the child and ends at a leaf or at the
    /// next marked artefact.
    pub subsequences: Vec<Vec<String>>,
}

/// The DSOs of one traversal plus the unmarked prefix leading from the
/// traversal root to the first marked artefact (or leaf).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsoTable {
    pub root: String,
    pub prefix: Vec<String>,
    pub dsos: BTreeMap<String, Dso>,
}

impl DsoTable {
    pub fn len(&self) -> usize {
        self.dsos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dsos.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Dso> {
        self.dsos.get(id)
    }
}

/// Segments paths into decomposition sequences.
pub fn extract_dsos(paths: &[TraversalPath]) -> DsoTable {
    let root = paths
        .first()
        .and_then(|p| p.nodes.first())
        .map(|n| n.id.clone())
        .unwrap_or_default();
    let mut dsos: BTreeMap<String, Dso> = BTreeMap::new();
    let mut prefix = Vec::new();

    for (pi, path) in paths.iter().enumerate() {
        let first_marked = path.nodes.iter().position(|n| n.marker.is_branching());
        if pi == 0 {
            let end = first_marked.unwrap_or(path.nodes.len() - 1);
            prefix = path.nodes[..=end].iter().map(|n| n.id.clone()).collect();
        }
        for (i, n) in path.nodes.iter().enumerate() {
            let kind = match n.marker {
                Marker::X => LinkKind::Or,
                Marker::A => LinkKind::And,
                Marker::None => continue,
            };
            let rest = &path.nodes[i + 1..];
            let end = rest
                .iter()
                .position(|m| m.marker.is_branching())
                .unwrap_or(rest.len().saturating_sub(1));
            let seq: Vec<String> = rest[..=end].iter().map(|m| m.id.clone()).collect();
            let dso = dsos.entry(n.id.clone()).or_insert_with(|| Dso {
                root: n.id.clone(),
                kind,
                subsequences: Vec::new(),
            });
            if !dso.subsequences.contains(&seq) {
                dso.subsequences.push(seq);
            }
        }
    }
    DsoTable { root, prefix, dsos }
}

/// A node of a routine label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RoutineLabel {
    Leaf {
        id: String,
    },
    Seq {
        id: String,
        child: Box<RoutineLabel>,
    },
    And {
        members: Vec<RoutineLabel>,
    },
    Choice {
        parent: String,
        selected: Box<RoutineLabel>,
        excluded: Vec<String>,
    },
}

impl RoutineLabel {
    /// The OR choices fixed by this label: OR artefact → selected child.
    pub fn choices(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        self.collect_choices(&mut out);
        out
    }

    fn collect_choices(&self, out: &mut BTreeMap<String, String>) {
        match self {
            RoutineLabel::Leaf { .. } => {}
            RoutineLabel::Seq { child, .. } => child.collect_choices(out),
            RoutineLabel::And { members } => members.iter().for_each(|m| m.collect_choices(out)),
            RoutineLabel::Choice {
                parent, selected, ..
            } => {
                out.insert(parent.clone(), selected.head().to_string());
                selected.collect_choices(out);
            }
        }
    }

    /// The first artefact named by this node.
    pub fn head(&self) -> &str {
        match self {
            RoutineLabel::Leaf { id } | RoutineLabel::Seq { id, .. } => id,
            RoutineLabel::And { members } => members.first().map(|m| m.head()).unwrap_or(""),
            RoutineLabel::Choice { selected, .. } => selected.head(),
        }
    }

    /// Exclusion groups in pre-order: `(parent, excluded children)`.
    pub fn exclusions(&self) -> Vec<(String, Vec<String>)> {
        let mut out = Vec::new();
        self.collect_exclusions(&mut out);
        out
    }

    fn collect_exclusions(&self, out: &mut Vec<(String, Vec<String>)>) {
        match self {
            RoutineLabel::Leaf { .. } => {}
            RoutineLabel::Seq { child, .. } => child.collect_exclusions(out),
            RoutineLabel::And { members } => members.iter().for_each(|m| m.collect_exclusions(out)),
            RoutineLabel::Choice {
                parent,
                selected,
                excluded,
            } => {
                out.push((parent.clone(), excluded.clone()));
                selected.collect_exclusions(out);
            }
        }
    }

    /// Canonical inline notation, e.g. `⟨G1,⟨⟨G2,⟨⟨T1,R4⟩,[G2,T2]⟩⟩,[G1,G3]⟩⟩`.
    pub fn canonical(&self) -> String {
        match self {
            RoutineLabel::Leaf { id } => format!("⟨{id}⟩"),
            _ => self.inline(),
        }
    }

    /// [`canonical`](Self::canonical) with ASCII angle brackets.
    pub fn canonical_ascii(&self) -> String {
        self.canonical().replace('⟨', "<").replace('⟩', ">")
    }

    fn inline(&self) -> String {
        match self {
            RoutineLabel::Leaf { id } => id.clone(),
            RoutineLabel::Seq { id, child } => format!("⟨{id},{}⟩", child.inline()),
            RoutineLabel::And { members } => {
                let parts: Vec<String> = members.iter().map(|m| m.member()).collect();
                format!("{{{}}}", parts.join(","))
            }
            RoutineLabel::Choice {
                parent,
                selected,
                excluded,
            } => format!(
                "⟨{},[{}]⟩",
                selected.member(),
                std::iter::once(parent.as_str())
                    .chain(excluded.iter().map(String::as_str))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        }
    }

    /// Rendering as an element of a set or choice: bare leaves get brackets.
    fn member(&self) -> String {
        match self {
            RoutineLabel::Leaf { id } => format!("⟨{id}⟩"),
            other => other.inline(),
        }
    }

    /// Compact notation: the selected structure followed by all exclusion
    /// groups, e.g. `⟨⟨G2,T1⟩,[G2,T2]⟩` or `⟨⟨G3,{⟨R1⟩,⟨T3⟩}⟩,[∅]⟩`.
    pub fn compact(&self) -> String {
        let groups = self.exclusions();
        let excl = if groups.is_empty() {
            "[∅]".to_string()
        } else {
            groups
                .iter()
                .map(|(p, ex)| format!("[{p},{}]", ex.join(",")))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("⟨{},{excl}⟩", self.plain_outer())
    }

    fn plain_outer(&self) -> String {
        match self {
            RoutineLabel::Leaf { id } => format!("⟨{id}⟩"),
            RoutineLabel::Choice { selected, .. } => selected.plain_outer(),
            other => other.plain(),
        }
    }

    fn plain(&self) -> String {
        match self {
            RoutineLabel::Leaf { id } => id.clone(),
            RoutineLabel::Seq { id, child } => format!("⟨{id},{}⟩", child.plain()),
            RoutineLabel::And { members } => {
                let parts: Vec<String> = members
                    .iter()
                    .map(|m| match m {
                        RoutineLabel::Leaf { id } => format!("⟨{id}⟩"),
                        other => other.plain(),
                    })
                    .collect();
                format!("{{{}}}", parts.join(","))
            }
            RoutineLabel::Choice { selected, .. } => selected.plain(),
        }
    }

    /// Nested arrays with node-kind tags, e.g. `["seq","G1",["leaf","R1"]]`.
    pub fn to_structured(&self) -> Value {
        match self {
            RoutineLabel::Leaf { id } => json!(["leaf", id]),
            RoutineLabel::Seq { id, child } => json!(["seq", id, child.to_structured()]),
            RoutineLabel::And { members } => json!([
                "and",
                members
                    .iter()
                    .map(|m| m.to_structured())
                    .collect::<Vec<_>>()
            ]),
            RoutineLabel::Choice {
                parent,
                selected,
                excluded,
            } => json!(["choice", parent, selected.to_structured(), excluded]),
        }
    }
}

impl fmt::Display for RoutineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

type Choices = BTreeMap<String, String>;

struct Deriver<'a> {
    table: &'a DsoTable,
    cap: usize,
    memo: HashMap<String, Vec<(RoutineLabel, Choices)>>,
}

impl Deriver<'_> {
    fn marked(&self, id: &str) -> bool {
        self.table.dsos.contains_key(id)
    }

    fn check(&self, n: usize, at: &str) -> Result<()> {
        if n > self.cap {
            Err(Error::CapExceeded {
                cap: self.cap,
                at: at.to_string(),
            })
        } else {
            Ok(())
        }
    }

    /// Labels for a run of artefacts ending at a leaf or marked artefact.
    fn run(&mut self, seq: &[String]) -> Result<Vec<(RoutineLabel, Choices)>> {
        let (last, init) = seq.split_last().expect("non-empty subsequence");
        let tail = if self.marked(last) {
            self.node(last)?
        } else {
            vec![(RoutineLabel::Leaf { id: last.clone() }, Choices::new())]
        };
        Ok(tail
            .into_iter()
            .map(|(mut label, choices)| {
                for id in init.iter().rev() {
                    label = RoutineLabel::Seq {
                        id: id.clone(),
                        child: Box::new(label),
                    };
                }
                (label, choices)
            })
            .collect())
    }

    fn node(&mut self, id: &str) -> Result<Vec<(RoutineLabel, Choices)>> {
        if let Some(hit) = self.memo.get(id) {
            return Ok(hit.clone());
        }
        let dso = self.table.dsos[id].clone();
        let children: Vec<String> = dso.subsequences.iter().map(|s| s[0].clone()).collect();
        let mut out = Vec::new();
        match dso.kind {
            LinkKind::Or => {
                for seq in &dso.subsequences {
                    let chosen = &seq[0];
                    let excluded: Vec<String> =
                        children.iter().filter(|c| *c != chosen).cloned().collect();
                    for (label, mut choices) in self.run(seq)? {
                        choices.insert(id.to_string(), chosen.clone());
                        out.push((
                            RoutineLabel::Seq {
                                id: id.to_string(),
                                child: Box::new(RoutineLabel::Choice {
                                    parent: id.to_string(),
                                    selected: Box::new(label),
                                    excluded: excluded.clone(),
                                }),
                            },
                            choices,
                        ));
                        self.check(out.len(), id)?;
                    }
                }
            }
            LinkKind::And => {
                let mut acc: Vec<(Vec<RoutineLabel>, Choices)> = vec![(Vec::new(), Choices::new())];
                for seq in &dso.subsequences {
                    let parts = self.run(seq)?;
                    let mut next = Vec::new();
                    for (members, choices) in &acc {
                        for (label, c) in &parts {
                            if let Some(merged) = merge_choices(choices, c) {
                                let mut m = members.clone();
                                m.push(label.clone());
                                next.push((m, merged));
                                self.check(next.len(), id)?;
                            }
                        }
                    }
                    acc = next;
                }
                out = acc
                    .into_iter()
                    .map(|(members, choices)| {
                        (
                            RoutineLabel::Seq {
                                id: id.to_string(),
                                child: Box::new(RoutineLabel::And { members }),
                            },
                            choices,
                        )
                    })
                    .collect();
            }
        }
        self.memo.insert(id.to_string(), out.clone());
        Ok(out)
    }
}

/// Merges two choice maps; `None` when they disagree on a shared OR node.
pub(crate) fn merge_choices(a: &Choices, b: &Choices) -> Option<Choices> {
    let mut out = a.clone();
    for (k, v) in b {
        match out.get(k) {
            Some(existing) if existing != v => return None,
            _ => {
                out.insert(k.clone(), v.clone());
            }
        }
    }
    Some(out)
}

/// Derives every routine label for the table's root, in child declaration
/// order.
pub fn derive_routine_labels(dsos: &DsoTable, root: &str) -> Result<Vec<RoutineLabel>> {
    derive_routine_labels_capped(dsos, root, DEFAULT_CAP)
}

pub fn derive_routine_labels_capped(
    dsos: &DsoTable,
    root: &str,
    cap: usize,
) -> Result<Vec<RoutineLabel>> {
    if dsos.root != root || dsos.prefix.is_empty() {
        return Err(Error::UnknownId(root.to_string()));
    }
    let mut d = Deriver {
        table: dsos,
        cap,
        memo: HashMap::new(),
    };
    let labels = d.run(&dsos.prefix)?;
    Ok(labels.into_iter().map(|(l, _)| l).collect())
}

/// Full pipeline: traverse, segment, derive.
pub fn orgmod_labels(model: &GoalModel, root: &str, cap: usize) -> Result<Vec<RoutineLabel>> {
    let paths = traverse_paths_capped(model, root, cap.saturating_mul(8).max(cap))?;
    let table = extract_dsos(&paths);
    derive_routine_labels_capped(&table, root, cap)
}

/// Number of ORGMods rooted at `root`.
pub fn count_orgmods(model: &GoalModel, root: &str, cap: usize) -> Result<usize> {
    Ok(orgmod_labels(model, root, cap)?.len())
}
