//! Bottom-up satisfaction reconciliation over a whole model.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::condition::{AltConditions, ConditionSet, Literal};
use crate::error::{Error, Result};
use crate::kb::{kb_reduce, KnowledgeBase};
use crate::model::{validate_model, Artefact, GoalModel, LinkKind};
use crate::orgmod::{merge_choices, RoutineLabel};

use super::operators::{check_commutativity, rec_kb, sibling_hits, ConsistencyHit};
use super::report::{
    AnnotatedModel, ConflictReport, Contribution, Deficiency, Finding, FindingKind, Warning,
};

type Choices = BTreeMap<String, String>;

/// One cumulative alternative with its bookkeeping.
#[derive(Clone, Debug)]
struct Alt {
    set: ConditionSet,
    choices: Choices,
    via: Option<String>,
    /// Indices into the node-local consistency hit table.
    hits: BTreeSet<usize>,
    /// Immediate conditions this node fails to establish on this
    /// alternative. They are reported here and assumed established by
    /// ancestors, so one deficiency is flagged exactly once.
    promised: ConditionSet,
}

impl Alt {
    fn new(
        set: ConditionSet,
        choices: Choices,
        via: Option<String>,
        hits: BTreeSet<usize>,
    ) -> Self {
        Alt {
            set,
            choices,
            via,
            hits,
            promised: ConditionSet::new(),
        }
    }

    /// What the alternative contributes to its parent.
    fn contribution(&self) -> ConditionSet {
        if self.promised.is_empty() {
            self.set.clone()
        } else {
            self.set.union(&self.promised)
        }
    }
}

struct Engine<'a> {
    model: &'a GoalModel,
    kb: &'a KnowledgeBase,
    scope: Choices,
    cap: usize,
    alts: HashMap<String, Vec<Alt>>,
    active: HashSet<String>,
    out: AnnotatedModel,
    report: ConflictReport,
}

/// Runs reconciliation for the sub-model under `root`, optionally restricted
/// to the OR choices of one routine label.
pub fn run_sra(
    model: &GoalModel,
    root: &str,
    kb: &KnowledgeBase,
    scope: Option<&RoutineLabel>,
    cap: usize,
) -> Result<(AnnotatedModel, ConflictReport)> {
    if model.artefact(root).is_none() {
        return Err(Error::UnknownId(root.to_string()));
    }
    run(model, vec![root.to_string()], kb, scope, cap)
}

/// Runs reconciliation from every top-level artefact (those without a
/// decomposition parent), in id order.
pub fn analyze(
    model: &GoalModel,
    kb: &KnowledgeBase,
    cap: usize,
) -> Result<(AnnotatedModel, ConflictReport)> {
    let roots = model.roots().into_iter().map(str::to_string).collect();
    run(model, roots, kb, None, cap)
}

fn run(
    model: &GoalModel,
    roots: Vec<String>,
    kb: &KnowledgeBase,
    scope: Option<&RoutineLabel>,
    cap: usize,
) -> Result<(AnnotatedModel, ConflictReport)> {
    let diags = validate_model(model);
    if !diags.is_empty() {
        return Err(Error::Invalid(diags));
    }
    let mut engine = Engine {
        model,
        kb,
        scope: scope.map(RoutineLabel::choices).unwrap_or_default(),
        cap: cap.max(1),
        alts: HashMap::new(),
        active: HashSet::new(),
        out: AnnotatedModel {
            base: model.clone(),
            roots: roots.clone(),
            ce: BTreeMap::new(),
            provenance: BTreeMap::new(),
            choices: BTreeMap::new(),
            scope: scope.cloned(),
        },
        report: ConflictReport::default(),
    };
    for r in &roots {
        engine.visit(r)?;
    }
    Ok((engine.out, engine.report))
}

fn hit_index(table: &mut Vec<ConsistencyHit>, hit: ConsistencyHit) -> usize {
    match table.iter().position(|h| *h == hit) {
        Some(i) => i,
        None => {
            table.push(hit);
            table.len() - 1
        }
    }
}

impl Engine<'_> {
    fn visit(&mut self, id: &str) -> Result<()> {
        if self.alts.contains_key(id) {
            return Ok(());
        }
        if !self.active.insert(id.to_string()) {
            let mut cycle: Vec<String> = self.active.iter().cloned().collect();
            cycle.sort();
            return Err(Error::DependencyCycle(cycle));
        }
        let art = self
            .model
            .artefact(id)
            .ok_or_else(|| Error::UnknownId(id.to_string()))?;
        let mut hits = Vec::new();
        let (alts, interior) = if self.model.is_leaf(id) {
            (self.leaf(art, &mut hits)?, false)
        } else {
            (self.interior(art, &mut hits)?, true)
        };
        self.finalize(art, alts, hits, interior)?;
        self.active.remove(id);
        Ok(())
    }

    fn leaf(&mut self, art: &Artefact, hits: &mut Vec<ConsistencyHit>) -> Result<Vec<Alt>> {
        let Some(dependee) = self.model.dependee_of(&art.id).map(str::to_string) else {
            return Ok(art
                .ie
                .iter()
                .map(|s| Alt::new(s.clone(), Choices::new(), None, BTreeSet::new()))
                .collect());
        };
        self.visit(&dependee)?;
        let dep_alts = self.alts[&dependee].clone();
        let mut out = Vec::new();
        for ie in &art.ie {
            for d in &dep_alts {
                let (kept, dropped) = rec_kb(ie, &d.contribution(), self.kb);
                let mut alt_hits = BTreeSet::new();
                for (literal, demanded) in dropped {
                    alt_hits.insert(hit_index(
                        hits,
                        ConsistencyHit::Hierarchic {
                            child: dependee.clone(),
                            literal,
                            demanded,
                        },
                    ));
                }
                out.push(Alt::new(ie.union(&kept), d.choices.clone(), None, alt_hits));
            }
        }
        Ok(out)
    }

    fn interior(&mut self, art: &Artefact, hits: &mut Vec<ConsistencyHit>) -> Result<Vec<Alt>> {
        let link = self
            .model
            .link(&art.id)
            .expect("interior node has a link")
            .clone();
        for c in &link.children {
            self.visit(c)?;
        }
        let core = art.ie.core();
        let branching = link.children.len() >= 2;

        if link.kind == LinkKind::Or {
            let chosen = self.scope.get(&art.id).cloned();
            let mut out = Vec::new();
            for c in &link.children {
                if chosen.as_ref().is_some_and(|ch| ch != c) {
                    continue;
                }
                for a in &self.alts[c] {
                    let (kept, dropped) = rec_kb(&core, &a.contribution(), self.kb);
                    let mut alt_hits = BTreeSet::new();
                    for (literal, demanded) in dropped {
                        alt_hits.insert(hit_index(
                            hits,
                            ConsistencyHit::Hierarchic {
                                child: c.clone(),
                                literal,
                                demanded,
                            },
                        ));
                    }
                    let mut choices = a.choices.clone();
                    if branching {
                        choices.insert(art.id.clone(), c.clone());
                    }
                    out.push(Alt::new(
                        kept,
                        choices,
                        branching.then(|| c.clone()),
                        alt_hits,
                    ));
                    self.check_cap(out.len(), &art.id)?;
                }
            }
            return Ok(out);
        }

        // AND: cross product of child alternatives, keeping only combinations
        // that agree on shared OR choices.
        struct Combo {
            choices: Choices,
            hits: BTreeSet<usize>,
            parts: Vec<(String, ConditionSet)>,
        }
        let mut acc = vec![Combo {
            choices: Choices::new(),
            hits: BTreeSet::new(),
            parts: Vec::new(),
        }];
        for c in &link.children {
            let child_alts = &self.alts[c];
            let reconciled: Vec<(ConditionSet, Vec<(Literal, Literal)>)> = child_alts
                .iter()
                .map(|a| rec_kb(&core, &a.contribution(), self.kb))
                .collect();
            let mut next = Vec::with_capacity(acc.len() * child_alts.len());
            for combo in &acc {
                for (a, (kept, dropped)) in child_alts.iter().zip(&reconciled) {
                    let Some(choices) = merge_choices(&combo.choices, &a.choices) else {
                        continue;
                    };
                    let mut h = combo.hits.clone();
                    for (literal, demanded) in dropped {
                        h.insert(hit_index(
                            hits,
                            ConsistencyHit::Hierarchic {
                                child: c.clone(),
                                literal: literal.clone(),
                                demanded: demanded.clone(),
                            },
                        ));
                    }
                    let mut parts = combo.parts.clone();
                    parts.push((c.clone(), kept.clone()));
                    next.push(Combo {
                        choices,
                        hits: h,
                        parts,
                    });
                }
            }
            self.check_cap(next.len(), &art.id)?;
            acc = next;
        }

        let mut warned = false;
        let mut out = Vec::with_capacity(acc.len());
        for mut combo in acc {
            let refs: Vec<(&String, ConditionSet)> =
                combo.parts.iter().map(|(c, s)| (c, s.clone())).collect();
            for hit in sibling_hits(&refs, self.kb) {
                combo.hits.insert(hit_index(hits, hit));
            }
            let sets: Vec<ConditionSet> = combo.parts.iter().map(|(_, s)| s.clone()).collect();
            if !warned && !check_commutativity(&sets) {
                warned = true;
                self.report.warnings.push(Warning {
                    at: art.id.clone(),
                    message: format!(
                        "state updates of the AND-children of {} do not commute",
                        art.id
                    ),
                });
            }
            let mut set = ConditionSet::new();
            for s in &sets {
                set.extend(s);
            }
            out.push(Alt::new(set, combo.choices, None, combo.hits));
        }
        Ok(out)
    }

    fn check_cap(&self, n: usize, at: &str) -> Result<()> {
        if n > self.cap {
            Err(Error::CapExceeded {
                cap: self.cap,
                at: at.to_string(),
            })
        } else {
            Ok(())
        }
    }

    fn finalize(
        &mut self,
        art: &Artefact,
        raw: Vec<Alt>,
        hits: Vec<ConsistencyHit>,
        interior: bool,
    ) -> Result<()> {
        // Mask, KB reduction, then collapse identical (set, choices) pairs.
        let mut alts: Vec<Alt> = Vec::new();
        for mut a in raw {
            let masked = a.set.difference(&art.mask);
            a.set = kb_reduce(&AltConditions::single(masked), self.kb).core();
            match alts
                .iter_mut()
                .find(|b| b.set == a.set && b.choices == a.choices)
            {
                Some(b) => b.hits.extend(a.hits),
                None => alts.push(a),
            }
        }
        if alts.is_empty() {
            // Every combination was incompatible; fall back to an empty
            // alternative so downstream nodes still have a value.
            alts.push(Alt::new(
                ConditionSet::new(),
                Choices::new(),
                None,
                BTreeSet::new(),
            ));
        }
        self.check_cap(alts.len(), &art.id)?;

        let mut public: Vec<ConditionSet> = Vec::new();
        let mut provenance = Vec::new();
        let mut choices = Vec::new();
        let mut index_of = Vec::with_capacity(alts.len());
        for a in &alts {
            match public.iter().position(|p| *p == a.set) {
                Some(i) => index_of.push(i),
                None => {
                    public.push(a.set.clone());
                    provenance.push(a.via.clone());
                    choices.push(a.choices.clone());
                    index_of.push(public.len() - 1);
                }
            }
        }
        let ce = AltConditions::from_alternatives(public).expect("at least one alternative");

        let affected = |hit: usize| -> Vec<usize> {
            let set: BTreeSet<usize> = alts
                .iter()
                .zip(&index_of)
                .filter(|(a, _)| a.hits.contains(&hit))
                .map(|(_, &i)| i)
                .collect();
            set.into_iter().collect()
        };

        let id = &art.id;
        let mut ordered: Vec<usize> = (0..hits.len()).collect();
        ordered.sort_by_key(|&i| matches!(hits[i], ConsistencyHit::Sibling { .. }));
        for i in ordered {
            let finding = match &hits[i] {
                ConsistencyHit::Hierarchic {
                    child,
                    literal,
                    demanded,
                } => Finding {
                    id: format!("hierarchic@{id}:{child}:{literal}"),
                    kind: FindingKind::Hierarchic,
                    at: id.clone(),
                    alternatives: affected(i),
                    children: vec![child.clone()],
                    conflicting: [literal.clone()].into_iter().collect(),
                    missing: [demanded.clone()].into_iter().collect(),
                    deficiencies: Vec::new(),
                    contributions: Vec::new(),
                },
                ConsistencyHit::Sibling { first, second } => Finding {
                    id: format!(
                        "sibling@{id}:{}:{}:{}:{}",
                        first.child, first.literal, second.child, second.literal
                    ),
                    kind: FindingKind::Sibling,
                    at: id.clone(),
                    alternatives: affected(i),
                    children: vec![first.child.clone(), second.child.clone()],
                    conflicting: [first.literal.clone(), second.literal.clone()]
                        .into_iter()
                        .collect(),
                    missing: ConditionSet::new(),
                    deficiencies: Vec::new(),
                    contributions: vec![
                        Contribution {
                            child: first.child.clone(),
                            literal: first.literal.clone(),
                        },
                        Contribution {
                            child: second.child.clone(),
                            literal: second.literal.clone(),
                        },
                    ],
                },
            };
            self.report.findings.push(finding);
        }

        if interior {
            let (finding, unmet) = self.entailment(art, &ce);
            if let Some(f) = finding {
                self.report.findings.push(f);
                for (a, &i) in alts.iter_mut().zip(&index_of) {
                    a.promised = unmet[i]
                        .iter()
                        .filter(|l| !a.set.contains(&l.negate()))
                        .cloned()
                        .collect();
                }
            }
        }

        self.out.ce.insert(id.clone(), ce);
        self.out.provenance.insert(id.clone(), provenance);
        self.out.choices.insert(id.clone(), choices);
        self.alts.insert(id.clone(), alts);
        Ok(())
    }

    /// Returns the finding, if any, and for every public alternative the
    /// unrefined immediate conditions it leaves unmet.
    fn entailment(
        &self,
        art: &Artefact,
        ce: &AltConditions,
    ) -> (Option<Finding>, Vec<ConditionSet>) {
        let mut deficiencies = Vec::new();
        let mut unmet = Vec::with_capacity(ce.len());
        for (i, alt) in ce.iter().enumerate() {
            let closure = self.kb.closure(alt);
            let raw = art
                .ie
                .iter()
                .map(|ie| ie.difference(&closure))
                .min_by_key(ConditionSet::len)
                .expect("ie has alternatives");
            if !raw.is_empty() {
                deficiencies.push(Deficiency {
                    alternative: i,
                    missing: self.refine(&raw, alt, &closure),
                });
            }
            unmet.push(raw);
        }
        if deficiencies.is_empty() {
            return (None, unmet);
        }
        let mut missing = ConditionSet::new();
        for d in &deficiencies {
            missing.extend(&d.missing);
        }
        let finding = Finding {
            id: format!("entailment@{}", art.id),
            kind: FindingKind::Entailment,
            at: art.id.clone(),
            alternatives: deficiencies.iter().map(|d| d.alternative).collect(),
            children: Vec::new(),
            conflicting: ConditionSet::new(),
            missing,
            deficiencies,
            contributions: Vec::new(),
        };
        (Some(finding), unmet)
    }

    /// Replaces a missing rule head by the missing atoms of the body conjunct
    /// closest to being satisfied, so the deficiency names what a new child
    /// would actually have to establish.
    fn refine(
        &self,
        missing: &ConditionSet,
        alt: &ConditionSet,
        closure: &ConditionSet,
    ) -> ConditionSet {
        let mut out = ConditionSet::new();
        for lit in missing {
            let best = if lit.positive {
                self.kb
                    .rules_for(&lit.atom)
                    .flat_map(|r| r.body.iter())
                    .filter(|conj| !conj.iter().any(|a| alt.contains(&Literal::neg(a.clone()))))
                    .map(|conj| {
                        conj.iter()
                            .map(|a| Literal::pos(a.clone()))
                            .filter(|l| !closure.contains(l))
                            .collect::<ConditionSet>()
                    })
                    .filter(|c| !c.is_empty())
                    .min_by_key(ConditionSet::len)
            } else {
                None
            };
            match best {
                Some(body) => out.extend(&body),
                None => {
                    out.insert(lit.clone());
                }
            }
        }
        out
    }
}
