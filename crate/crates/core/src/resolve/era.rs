use std::collections::{BTreeMap, VecDeque};

use crate::condition::{AltConditions, ConditionSet, Literal};
use crate::error::{Error, Result};
use crate::kb::kb_consistent;
use crate::model::{Artefact, LinkKind};
use crate::reconcile::{rec_kb, Finding, FindingKind};

use super::plan::{carrier_name, Edit, IdAllocator, RefactoringPlan};
use super::ResolutionContext;

/// Synthesizes the refactoring for an entailment finding: donor links where
/// some existing artefact already establishes a missing literal, and a
/// temporary carrier goal for the rest.
pub fn era_resolve(ctx: &ResolutionContext<'_>, finding: &Finding) -> Result<RefactoringPlan> {
    let mut ids = IdAllocator::new(ctx.model);
    let edits = era_edits(ctx, finding, &mut ids)?;
    Ok(RefactoringPlan::new(
        ctx.model.revision(),
        &finding.id,
        "Entailment resolution",
        edits,
    ))
}

pub(crate) fn era_edits(
    ctx: &ResolutionContext<'_>,
    finding: &Finding,
    ids: &mut IdAllocator,
) -> Result<Vec<Edit>> {
    if finding.kind != FindingKind::Entailment {
        return Err(Error::InvalidEdit(format!(
            "finding `{}` is not an entailment finding",
            finding.id
        )));
    }
    if finding.deficiencies.iter().all(|d| d.missing.is_empty()) {
        return Err(Error::NothingToResolve(finding.id.clone()));
    }
    let art = ctx
        .model
        .artefact(&finding.at)
        .ok_or_else(|| Error::UnknownId(finding.at.clone()))?;
    let or_branching = ctx
        .model
        .link(&art.id)
        .is_some_and(|l| l.kind == LinkKind::Or && l.children.len() >= 2);
    if or_branching {
        Ok(or_case(ctx, art, finding, ids))
    } else {
        Ok(and_case(ctx, art, finding, ids))
    }
}

impl ResolutionContext<'_> {
    fn ce_of(&self, id: &str) -> Option<&AltConditions> {
        self.annotated.ce(id)
    }

    /// No finding anywhere in the sub-model rooted at `id`.
    fn clean(&self, id: &str) -> bool {
        let sub = self.model.subtree(id);
        !self.report.findings.iter().any(|f| sub.contains(&f.at))
    }

    /// Every alternative of `id` establishes `lit` (directly or via the KB).
    fn establishes(&self, id: &str, lit: &Literal) -> bool {
        self.ce_of(id)
            .is_some_and(|ce| ce.iter().all(|alt| self.kb.closure(alt).contains(lit)))
    }

    /// A donor may join a parent whose immediate core is `core` and whose
    /// current cumulative alternatives are `current` without raising a
    /// hierarchic or sibling conflict.
    fn compatible(
        &self,
        core: &ConditionSet,
        current: Option<&AltConditions>,
        donor: &str,
    ) -> bool {
        let Some(donor_ce) = self.ce_of(donor) else {
            return false;
        };
        donor_ce.iter().all(|d| {
            rec_kb(core, d, self.kb).1.is_empty()
                && current.map_or(true, |cur| {
                    cur.iter().all(|c| kb_consistent(&c.union(d), self.kb))
                })
        })
    }
}

fn carrier(actor: &str, lits: ConditionSet, ids: &mut IdAllocator) -> (String, Edit) {
    let id = ids.next("CT");
    let edit = Edit::AddTempGoal {
        id: id.clone(),
        name: carrier_name(&lits),
        actor: actor.to_string(),
        ie: AltConditions::single(lits),
    };
    (id, edit)
}

/// AND-decomposed (or single-child) failure point: link an AND-sibling that
/// already establishes a literal, otherwise add one carrier child.
fn and_case(
    ctx: &ResolutionContext<'_>,
    art: &Artefact,
    finding: &Finding,
    ids: &mut IdAllocator,
) -> Vec<Edit> {
    let model = ctx.model;
    let mut missing = ConditionSet::new();
    for d in &finding.deficiencies {
        missing.extend(&d.missing);
    }
    let core = art.ie.core();
    let own = ctx.ce_of(&art.id);

    let mut siblings: Vec<&str> = Vec::new();
    for p in model.parents(&art.id) {
        let link = model.link(p).expect("parent has a link");
        if link.kind != LinkKind::And {
            continue;
        }
        for c in &link.children {
            if c != &art.id && !siblings.contains(&c.as_str()) {
                siblings.push(c);
            }
        }
    }

    let mut edits = Vec::new();
    let mut linked: Vec<&str> = Vec::new();
    let mut rest = ConditionSet::new();
    for lit in &missing {
        let donor = siblings.iter().copied().find(|&s| {
            ctx.establishes(s, lit)
                && model.artefact(s).is_some_and(|a| a.actor == art.actor)
                && ctx.clean(s)
                && !model.reaches(s, &art.id)
                && !model.reaches(&art.id, s)
                && ctx.compatible(&core, own, s)
        });
        match donor {
            Some(s) => {
                if !linked.contains(&s) {
                    linked.push(s);
                    edits.push(Edit::AddAndLink {
                        parent: art.id.clone(),
                        child: s.to_string(),
                    });
                }
            }
            None => {
                rest.insert(lit.clone());
            }
        }
    }
    if !rest.is_empty() {
        let (id, add) = carrier(&art.actor, rest, ids);
        edits.push(add);
        edits.push(Edit::AddAndLink {
            parent: art.id.clone(),
            child: id,
        });
    }
    edits
}

/// OR-decomposed failure point: every failing branch is wrapped in a
/// temporary AND-goal that also pulls in a carrier for unavailable literals
/// and donors from other branches for available ones.
fn or_case(
    ctx: &ResolutionContext<'_>,
    art: &Artefact,
    finding: &Finding,
    ids: &mut IdAllocator,
) -> Vec<Edit> {
    let model = ctx.model;
    let m = &art.id;
    let ce = ctx.ce_of(m).cloned().unwrap_or_default();
    let provenance = ctx.annotated.provenance.get(m).cloned().unwrap_or_default();
    let via = |i: usize| provenance.get(i).cloned().flatten();

    // Missing literals per failing branch, in child declaration order.
    let mut per_child: BTreeMap<String, ConditionSet> = BTreeMap::new();
    for d in &finding.deficiencies {
        if let Some(child) = via(d.alternative) {
            per_child.entry(child).or_default().extend(&d.missing);
        }
    }
    let children = model.children(m).to_vec();
    let failing: Vec<(String, ConditionSet)> = children
        .iter()
        .filter_map(|c| per_child.get(c).map(|s| (c.clone(), s.clone())))
        .collect();

    let mut edits = Vec::new();
    let mut carriers: Vec<(ConditionSet, String)> = Vec::new();
    for (child, missing) in failing {
        let child_art = model.artefact(&child).expect("child exists");
        let gt = ids.next("GT");
        edits.push(Edit::AddTempGoal {
            id: gt.clone(),
            name: format!("{} (merged)", child_art.name),
            actor: art.actor.clone(),
            ie: child_art.ie.clone(),
        });
        edits.push(Edit::AddParent {
            parent: m.clone(),
            wrapper: gt.clone(),
            child: child.clone(),
        });

        let core = child_art.ie.core();
        let current = ctx.ce_of(&child);
        let mut zero = ConditionSet::new();
        let mut donors: Vec<String> = Vec::new();
        for lit in &missing {
            // Smallest-index alternative through another branch carrying it.
            let available = ce.iter().enumerate().find(|(r, alt)| {
                via(*r).is_some_and(|c| c != child) && ctx.kb.closure(alt).contains(lit)
            });
            let donor = available.and_then(|(r, _)| {
                let branch = via(r)?;
                let choices = ctx
                    .annotated
                    .choices
                    .get(m)
                    .and_then(|c| c.get(r))
                    .cloned()
                    .unwrap_or_default();
                shallowest_donor(ctx, &branch, &choices, lit, art, &core, current)
            });
            match donor {
                Some(d) => {
                    if !donors.contains(&d) {
                        donors.push(d);
                    }
                }
                None => {
                    zero.insert(lit.clone());
                }
            }
        }
        if !zero.is_empty() {
            let ct = match carriers.iter().find(|(s, _)| *s == zero) {
                Some((_, id)) => id.clone(),
                None => {
                    let (id, add) = carrier(&art.actor, zero.clone(), ids);
                    edits.push(add);
                    carriers.push((zero, id.clone()));
                    id
                }
            };
            edits.push(Edit::AddAndLink {
                parent: gt.clone(),
                child: ct,
            });
        }
        for d in donors {
            edits.push(Edit::AddAndLink {
                parent: gt.clone(),
                child: d,
            });
        }
    }
    edits
}

/// Breadth-first search along the routine of alternative `r` (following its
/// OR choices) for the shallowest artefact whose immediate core carries
/// `lit` and which can be linked without new conflicts.
fn shallowest_donor(
    ctx: &ResolutionContext<'_>,
    branch: &str,
    choices: &BTreeMap<String, String>,
    lit: &Literal,
    at: &Artefact,
    core: &ConditionSet,
    current: Option<&AltConditions>,
) -> Option<String> {
    let model = ctx.model;
    let mut queue = VecDeque::from([branch.to_string()]);
    let mut seen = std::collections::BTreeSet::new();
    while let Some(n) = queue.pop_front() {
        if !seen.insert(n.clone()) {
            continue;
        }
        let a = model.artefact(&n)?;
        if a.ie.core().contains(lit)
            && a.actor == at.actor
            && ctx.establishes(&n, lit)
            && ctx.clean(&n)
            && !model.reaches(&n, &at.id)
            && ctx.compatible(core, current, &n)
        {
            return Some(n);
        }
        if let Some(link) = model.link(&n) {
            match (link.kind, choices.get(&n)) {
                (LinkKind::Or, Some(chosen)) => queue.push_back(chosen.clone()),
                _ => queue.extend(link.children.iter().cloned()),
            }
        }
    }
    None
}
