use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::GoalModel;

/// A violated structural invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub message: String,
    pub ids: Vec<String>,
}

impl Diagnostic {
    fn new(code: &str, message: String, ids: Vec<String>) -> Self {
        Self {
            code: code.to_string(),
            message,
            ids,
        }
    }
}

/// Checks every structural invariant and returns one diagnostic per
/// violation, in a deterministic order. An empty list means the model is
/// well formed.
pub fn validate_model(model: &GoalModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for (id, a) in &model.artefacts {
        match model.actors.get(&a.actor) {
            None => out.push(Diagnostic::new(
                "unknown-actor",
                format!("unknown actor `{}` for {id}", a.actor),
                vec![id.clone()],
            )),
            Some(actor) if !actor.members.contains(id) => out.push(Diagnostic::new(
                "membership",
                format!("{id} is not listed as a member of actor {}", a.actor),
                vec![id.clone()],
            )),
            Some(_) => {}
        }
    }
    for actor in model.actors.values() {
        for m in &actor.members {
            if model.artefacts.get(m).map(|a| &a.actor) != Some(&actor.id) {
                out.push(Diagnostic::new(
                    "membership",
                    format!("actor {} lists unknown member {m}", actor.id),
                    vec![m.clone()],
                ));
            }
        }
    }

    for (parent, link) in &model.decompositions {
        if link.parent != *parent {
            out.push(Diagnostic::new(
                "link-key",
                format!("link for {} filed under {parent}", link.parent),
                vec![parent.clone()],
            ));
        }
        if link.children.is_empty() {
            out.push(Diagnostic::new(
                "empty-link",
                format!("decomposition of {parent} has no children"),
                vec![parent.clone()],
            ));
        }
        let Some(p) = model.artefacts.get(parent) else {
            out.push(Diagnostic::new(
                "unknown-id",
                format!("unknown id in link: {parent}"),
                vec![parent.clone()],
            ));
            continue;
        };
        let mut seen = BTreeSet::new();
        for c in &link.children {
            if !seen.insert(c) {
                out.push(Diagnostic::new(
                    "duplicate-child",
                    format!("duplicate child {c} under {parent}"),
                    vec![parent.clone(), c.clone()],
                ));
            }
            match model.artefacts.get(c) {
                None => out.push(Diagnostic::new(
                    "unknown-id",
                    format!("unknown id in link: {c}"),
                    vec![c.clone()],
                )),
                Some(child) if child.actor != p.actor => out.push(Diagnostic::new(
                    "cross-actor-link",
                    format!("decomposition {parent} -> {c} crosses actors"),
                    vec![parent.clone(), c.clone()],
                )),
                Some(_) => {}
            }
        }
    }

    if let Some(cycle) = find_cycle(model.artefacts.keys(), |n| model.children(n).to_vec()) {
        out.push(Diagnostic::new(
            "decomposition-cycle",
            format!("decomposition cycle: {}", cycle.join(",")),
            cycle,
        ));
    }

    let mut out_degree: BTreeMap<&str, usize> = BTreeMap::new();
    for dep in &model.dependencies {
        let (d, e) = (&dep.depender.artefact, &dep.dependee.artefact);
        *out_degree.entry(d).or_default() += 1;
        for (role, ep) in [("depender", &dep.depender), ("dependee", &dep.dependee)] {
            match model.artefacts.get(&ep.artefact) {
                None => out.push(Diagnostic::new(
                    "unknown-id",
                    format!("unknown id in dependency: {}", ep.artefact),
                    vec![ep.artefact.clone()],
                )),
                Some(a) if a.actor != ep.actor => out.push(Diagnostic::new(
                    "dependency-actor",
                    format!("{} does not belong to actor {}", ep.artefact, ep.actor),
                    vec![ep.artefact.clone()],
                )),
                Some(_) if !model.is_leaf(&ep.artefact) => out.push(Diagnostic::new(
                    &format!("{role}-not-leaf"),
                    format!("{role} not leaf: {}", ep.artefact),
                    vec![ep.artefact.clone()],
                )),
                Some(_) => {}
            }
        }
        if d == e {
            out.push(Diagnostic::new(
                "dependency-cycle",
                format!("dependency cycle: {d}"),
                vec![d.clone()],
            ));
        }
    }
    for (d, n) in out_degree {
        if n > 1 {
            out.push(Diagnostic::new(
                "dependency-fan-out",
                format!("dependency fan-out: {d} has {n} dependees"),
                vec![d.to_string()],
            ));
        }
    }
    let dep_nodes: BTreeSet<String> = model
        .dependencies
        .iter()
        .filter(|d| d.depender.artefact != d.dependee.artefact)
        .map(|d| d.depender.artefact.clone())
        .collect();
    if let Some(cycle) = find_cycle(dep_nodes.iter(), |n| {
        model
            .dependencies
            .iter()
            .filter(|d| d.depender.artefact == n && d.dependee.artefact != n)
            .map(|d| d.dependee.artefact.clone())
            .collect()
    }) {
        out.push(Diagnostic::new(
            "dependency-cycle",
            format!("dependency cycle: {}", cycle.join(",")),
            cycle,
        ));
    }

    out
}

/// Returns the members of the first cycle found (sorted), if any.
fn find_cycle<'a, F>(nodes: impl Iterator<Item = &'a String>, succ: F) -> Option<Vec<String>>
where
    F: Fn(&str) -> Vec<String>,
{
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    let mut marks: BTreeMap<String, Mark> = BTreeMap::new();
    for start in nodes {
        if marks.contains_key(start) {
            continue;
        }
        // Iterative DFS keeping the active path so the cycle can be reported.
        let mut path: Vec<String> = vec![start.clone()];
        let mut stack: Vec<(String, Vec<String>)> = vec![(start.clone(), succ(start))];
        marks.insert(start.clone(), Mark::Active);
        while let Some((_, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(next) => match marks.get(&next) {
                    Some(Mark::Active) => {
                        let pos = path.iter().position(|p| *p == next).unwrap_or(0);
                        let mut cycle: Vec<String> = path[pos..].to_vec();
                        cycle.sort();
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(next.clone(), Mark::Active);
                        path.push(next.clone());
                        let s = succ(&next);
                        stack.push((next, s));
                    }
                },
                None => {
                    let (done, _) = stack.pop().expect("non-empty stack");
                    path.pop();
                    marks.insert(done, Mark::Done);
                }
            }
        }
    }
    None
}
