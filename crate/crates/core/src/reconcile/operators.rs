//! Reconciliation operators over single nodes.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::condition::{rec, AltConditions, ConditionSet, Literal};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::model::{GoalModel, LinkKind};

use super::report::Contribution;

/// `rec` extended with the knowledge base: besides literals whose negation
/// the parent demands, positive child atoms that are mutually exclusive with
/// a positive parent atom are dropped. Returns the reconciled set and, for
/// every dropped literal, the parent literal it clashed with.
pub fn rec_kb(
    ie_parent: &ConditionSet,
    ce_child: &ConditionSet,
    kb: &KnowledgeBase,
) -> (ConditionSet, Vec<(Literal, Literal)>) {
    let mut kept = ConditionSet::new();
    let mut dropped = Vec::new();
    for lit in ce_child {
        let neg = lit.negate();
        if ie_parent.contains(&neg) {
            dropped.push((lit.clone(), neg));
            continue;
        }
        if lit.positive && !kb.mutexes.is_empty() {
            if let Some(other) = ie_parent.positive_atoms().find(|a| kb.mutex(&lit.atom, a)) {
                dropped.push((lit.clone(), Literal::pos(other)));
                continue;
            }
        }
        kept.insert(lit.clone());
    }
    debug_assert!(kept.is_subset(&rec(ie_parent, ce_child)));
    (kept, dropped)
}

/// AND reconciliation: one output alternative per combination of child
/// alternatives (cross product in declaration order), each the union of the
/// reconciled parts.
pub fn and_rec(ie_parent: &ConditionSet, child_ces: &[AltConditions]) -> AltConditions {
    let mut acc = vec![ConditionSet::new()];
    for child in child_ces {
        let mut next = Vec::with_capacity(acc.len() * child.len());
        for a in &acc {
            for alt in child {
                next.push(a.union(&rec(ie_parent, alt)));
            }
        }
        acc = next;
    }
    AltConditions::from_alternatives(acc).unwrap_or_default()
}

/// OR reconciliation: every child alternative reconciled against the parent.
/// The second component names the child index that produced each output
/// alternative (first producer wins when duplicates collapse).
pub fn or_rec(
    ie_parent: &ConditionSet,
    child_ces: &[AltConditions],
) -> (AltConditions, Vec<usize>) {
    let mut alts: Vec<ConditionSet> = Vec::new();
    let mut provenance = Vec::new();
    for (i, child) in child_ces.iter().enumerate() {
        for alt in child {
            let r = rec(ie_parent, alt);
            if !alts.contains(&r) {
                alts.push(r);
                provenance.push(i);
            }
        }
    }
    (
        AltConditions::from_alternatives(alts).unwrap_or_default(),
        provenance,
    )
}

/// Follows the dependency chain starting at `leaf` and returns the visited
/// artefacts in order. Fails on a cycle.
pub fn dependency_chain(model: &GoalModel, leaf: &str) -> Result<Vec<String>> {
    let mut chain = vec![leaf.to_string()];
    let mut cur = leaf;
    while let Some(next) = model.dependee_of(cur) {
        if let Some(pos) = chain.iter().position(|c| c == next) {
            let mut cycle = chain[pos..].to_vec();
            cycle.sort();
            return Err(Error::DependencyCycle(cycle));
        }
        chain.push(next.to_string());
        cur = next;
    }
    Ok(chain)
}

/// Combines a dependent leaf's own conditions with what its dependee
/// provides: `IE ∪ rec(IE, CE(dependee))` per pair of alternatives.
pub fn dep_step(ie: &AltConditions, dependee_ce: &AltConditions) -> AltConditions {
    let mut out = Vec::new();
    for i in ie {
        for d in dependee_ce {
            out.push(i.union(&rec(i, d)));
        }
    }
    AltConditions::from_alternatives(out).unwrap_or_default()
}

/// Cumulative conditions of a leaf, unfolding its dependency chain from the
/// far end: the last artefact contributes its immediate conditions, and each
/// earlier one reconciles its own conditions with its successor's.
pub fn dep_rec(model: &GoalModel, leaf: &str) -> Result<AltConditions> {
    let chain = dependency_chain(model, leaf)?;
    let mut ce: Option<AltConditions> = None;
    for id in chain.iter().rev() {
        let a = model
            .artefact(id)
            .ok_or_else(|| Error::UnknownId(id.clone()))?;
        let next = match ce {
            None => a.ie.clone(),
            Some(dep) => dep_step(&a.ie, &dep),
        };
        ce = Some(next.without(&a.mask));
    }
    Ok(ce.expect("chain contains the leaf"))
}

/// Applies an event to a state: literals the event contradicts are
/// overwritten and the rest of the event is added.
pub fn state_update(s: &ConditionSet, event_ce: &ConditionSet) -> ConditionSet {
    s.difference(&crate::condition::negate_set(event_ce))
        .union(event_ce)
}

fn fold_updates<'a>(order: impl Iterator<Item = &'a ConditionSet>) -> ConditionSet {
    order.fold(ConditionSet::new(), |s, e| state_update(&s, e))
}

/// True when applying sibling events in any order reaches the same state.
/// Exhaustive over permutations for up to six siblings; pairwise beyond.
pub fn check_commutativity(sibling_ces: &[ConditionSet]) -> bool {
    let n = sibling_ces.len();
    if n <= 1 {
        return true;
    }
    if n > 6 {
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&sibling_ces[i], &sibling_ces[j]);
                if fold_updates([a, b].into_iter()) != fold_updates([b, a].into_iter()) {
                    return false;
                }
            }
        }
        return true;
    }
    let reference = fold_updates(sibling_ces.iter());
    let mut idx: Vec<usize> = (0..n).collect();
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                idx.swap(0, i);
            } else {
                idx.swap(c[i], i);
            }
            if fold_updates(idx.iter().map(|&k| &sibling_ces[k])) != reference {
                return false;
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    true
}

/// Indices of alternatives that do not contain `ie`.
pub fn detect_entailment(ie: &ConditionSet, ce: &AltConditions) -> Vec<usize> {
    ce.iter()
        .enumerate()
        .filter(|(_, alt)| !ie.is_subset(alt))
        .map(|(i, _)| i)
        .collect()
}

/// One consistency problem found while reconciling a single combination of
/// child alternatives.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConsistencyHit {
    Hierarchic {
        child: String,
        literal: Literal,
        demanded: Literal,
    },
    Sibling {
        first: Contribution,
        second: Contribution,
    },
}

/// Hierarchic conflicts for every child part, and (for AND links) sibling
/// conflicts between the reconciled parts of different children.
pub fn detect_consistency(
    ie: &ConditionSet,
    kind: LinkKind,
    children: &[(String, ConditionSet)],
    kb: &KnowledgeBase,
) -> Vec<ConsistencyHit> {
    let mut hits = Vec::new();
    let mut parts = Vec::with_capacity(children.len());
    for (child, ce) in children {
        let (kept, dropped) = rec_kb(ie, ce, kb);
        for (literal, demanded) in dropped {
            hits.push(ConsistencyHit::Hierarchic {
                child: child.clone(),
                literal,
                demanded,
            });
        }
        parts.push((child, kept));
    }
    if kind == LinkKind::And {
        hits.extend(sibling_hits(&parts, kb));
    }
    hits
}

pub(crate) fn sibling_hits(
    parts: &[(&String, ConditionSet)],
    kb: &KnowledgeBase,
) -> Vec<ConsistencyHit> {
    let mut seen = BTreeSet::new();
    let mut hits = Vec::new();
    for (i, (ci, pi)) in parts.iter().enumerate() {
        for (cj, pj) in &parts[i + 1..] {
            if ci == cj {
                continue;
            }
            for l in pi {
                let clash = pj
                    .iter()
                    .filter(|m| {
                        (m.atom == l.atom && m.positive != l.positive)
                            || (l.positive && m.positive && kb.mutex(&l.atom, &m.atom))
                    })
                    .cloned()
                    .collect::<Vec<_>>();
                for m in clash {
                    let key = ((*ci).clone(), l.clone(), (*cj).clone(), m.clone());
                    if seen.insert(key) {
                        hits.push(ConsistencyHit::Sibling {
                            first: Contribution {
                                child: (*ci).clone(),
                                literal: l.clone(),
                            },
                            second: Contribution {
                                child: (*cj).clone(),
                                literal: m,
                            },
                        });
                    }
                }
            }
        }
    }
    hits
}

/// Alternative indices ordered by how many literals they add beyond `ie`;
/// ties keep declaration order.
pub fn minimality_rank(ie: &ConditionSet, alts: &AltConditions) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..alts.len()).collect();
    idx.sort_by_key(|&i| alts.alternatives()[i].difference(ie).len());
    idx
}
