#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use afscr_core::{parse_kb, parse_model, AltConditions, ConditionSet, GoalModel, KnowledgeBase};
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    // Resolves from any workspace crate that includes this module.
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn model(name: &str) -> GoalModel {
    parse_model(&fixture(&format!("{name}.goal"))).unwrap()
}

pub fn kb(name: &str) -> KnowledgeBase {
    parse_kb(&fixture(&format!("{name}.kb"))).unwrap()
}

pub fn set(s: &str) -> ConditionSet {
    ConditionSet::parse(s).unwrap()
}

pub fn alts(sets: &[&str]) -> AltConditions {
    AltConditions::from_alternatives(sets.iter().map(|s| set(s))).unwrap()
}

/// Alternatives compared as a set of sets (order-insensitive).
pub fn as_sets(a: &AltConditions) -> Vec<ConditionSet> {
    let mut v: Vec<ConditionSet> = a.iter().cloned().collect();
    v.sort_by_key(|s| s.to_string());
    v
}

pub const ATOMS: [&str; 8] = ["a", "b", "c", "d", "e", "f", "g", "h"];

/// A random internally consistent literal set over the first `n_atoms`
/// atoms.
pub fn random_set<R: Rng + ?Sized>(rng: &mut R, n_atoms: usize, max_len: usize) -> ConditionSet {
    let len = rng.random_range(0..=max_len.min(n_atoms));
    let mut picked: Vec<usize> = (0..n_atoms).collect();
    for i in (1..picked.len()).rev() {
        picked.swap(i, rng.random_range(0..=i));
    }
    picked
        .into_iter()
        .take(len)
        .map(|i| {
            let atom = ATOMS[i];
            if rng.random_bool(0.5) {
                atom.to_string()
            } else {
                format!("!{atom}")
            }
            .parse()
            .unwrap()
        })
        .collect()
}

/// Random single-actor decomposition tree in DSL form. Nodes are numbered in
/// creation order; each non-root picks an earlier node as parent, and each
/// parent gets a random AND/OR kind.
pub struct RandomTree {
    pub source: String,
    pub parents: BTreeMap<usize, Vec<usize>>,
    pub kinds: BTreeMap<usize, &'static str>,
    pub size: usize,
}

pub fn random_tree(
    rng: &mut impl Rng,
    max_nodes: usize,
    mut ie: impl FnMut(&mut dyn rand::RngCore, usize) -> String,
) -> RandomTree {
    let size = rng.random_range(1..=max_nodes);
    let mut parents: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for n in 1..size {
        let p = rng.random_range(0..n);
        parents.entry(p).or_default().push(n);
    }
    let kinds: BTreeMap<usize, &'static str> = parents
        .keys()
        .map(|&p| (p, if rng.random_bool(0.5) { "or" } else { "and" }))
        .collect();
    let mut source = String::from("actor A \"A\" {\n");
    for n in 0..size {
        let clause = ie(rng, n);
        source.push_str(&format!("  goal N{n} \"n{n}\"{clause};\n"));
    }
    for (p, kids) in &parents {
        let list: Vec<String> = kids.iter().map(|k| format!("N{k}")).collect();
        source.push_str(&format!("  {} N{p} -> {};\n", kinds[p], list.join(", ")));
    }
    source.push_str("}\n");
    RandomTree {
        source,
        parents,
        kinds,
        size,
    }
}
