//! Propositional satisfaction conditions.
//!
//! A [`Literal`] is an atom with a polarity, a [`ConditionSet`] is a
//! conjunction of literals, and an [`AltConditions`] value is a disjunction of
//! condition sets (one per alternative strategy). The free functions at the
//! bottom of this module are the reconciliation primitives everything else is
//! built on.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An atom with polarity. Written `p` or `!p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: String,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: impl Into<String>) -> Self {
        Self {
            atom: atom.into(),
            positive: true,
        }
    }

    pub fn neg(atom: impl Into<String>) -> Self {
        Self {
            atom: atom.into(),
            positive: false,
        }
    }

    pub fn negate(&self) -> Self {
        Self {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }
}

// Sorted by atom name, positive before negative.
impl Ord for Literal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.atom
            .cmp(&other.atom)
            .then_with(|| other.positive.cmp(&self.positive))
    }
}

impl PartialOrd for Literal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            f.write_str(&self.atom)
        } else {
            write!(f, "!{}", self.atom)
        }
    }
}

/// Error returned when a literal or atom is not a valid identifier.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid literal `{0}`")]
pub struct InvalidLiteral(pub String);

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for Literal {
    type Err = InvalidLiteral;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (atom, positive) = if let Some(rest) = s.strip_prefix('!') {
            (rest, false)
        } else if let Some(rest) = s.strip_prefix('¬') {
            (rest, false)
        } else if let Some(rest) = s.strip_prefix('~') {
            (rest, false)
        } else {
            (s, true)
        };
        if !is_identifier(atom) {
            return Err(InvalidLiteral(s.to_string()));
        }
        Ok(Self {
            atom: atom.to_string(),
            positive,
        })
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A conjunction of literals with set semantics.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionSet(BTreeSet<Literal>);

impl ConditionSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a whitespace- or comma-separated literal list such as `"p, !q"`.
    pub fn parse(s: &str) -> Result<Self, InvalidLiteral> {
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect()
    }

    pub fn insert(&mut self, lit: Literal) -> bool {
        self.0.insert(lit)
    }

    pub fn remove(&mut self, lit: &Literal) -> bool {
        self.0.remove(lit)
    }

    pub fn contains(&self, lit: &Literal) -> bool {
        self.0.contains(lit)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Literal> + '_ {
        self.0.iter()
    }

    pub fn union(&self, other: &ConditionSet) -> ConditionSet {
        self.0.union(&other.0).cloned().collect()
    }

    pub fn intersection(&self, other: &ConditionSet) -> ConditionSet {
        self.0.intersection(&other.0).cloned().collect()
    }

    pub fn difference(&self, other: &ConditionSet) -> ConditionSet {
        self.0.difference(&other.0).cloned().collect()
    }

    pub fn is_subset(&self, other: &ConditionSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn extend(&mut self, other: &ConditionSet) {
        self.0.extend(other.0.iter().cloned());
    }

    /// True when no atom occurs with both polarities.
    pub fn is_consistent(&self) -> bool {
        self.0
            .iter()
            .all(|l| l.positive || !self.0.contains(&l.negate()))
    }

    pub fn positive_atoms(&self) -> impl Iterator<Item = &str> + '_ {
        self.0
            .iter()
            .filter(|l| l.positive)
            .map(|l| l.atom.as_str())
    }

    pub fn atoms(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(|l| l.atom.as_str())
    }
}

impl FromIterator<Literal> for ConditionSet {
    fn from_iter<I: IntoIterator<Item = Literal>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ConditionSet {
    type Item = &'a Literal;
    type IntoIter = std::collections::btree_set::Iter<'a, Literal>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("{}");
        }
        f.write_str("{ ")?;
        for (i, lit) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{lit}")?;
        }
        f.write_str(" }")
    }
}

/// A non-empty disjunction of condition sets, in insertion order, without
/// duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct AltConditions(Vec<ConditionSet>);

impl AltConditions {
    pub fn single(set: ConditionSet) -> Self {
        Self(vec![set])
    }

    /// Builds a disjunction, dropping duplicate alternatives (first wins).
    /// Returns `None` for an empty input.
    pub fn from_alternatives(alts: impl IntoIterator<Item = ConditionSet>) -> Option<Self> {
        let mut out: Vec<ConditionSet> = Vec::new();
        for alt in alts {
            if !out.contains(&alt) {
                out.push(alt);
            }
        }
        if out.is_empty() {
            None
        } else {
            Some(Self(out))
        }
    }

    pub fn alternatives(&self) -> &[ConditionSet] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_single(&self) -> bool {
        self.0.len() == 1
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ConditionSet> {
        self.0.iter()
    }

    pub fn get(&self, index: usize) -> Option<&ConditionSet> {
        self.0.get(index)
    }

    /// Literals shared by every alternative.
    pub fn core(&self) -> ConditionSet {
        let mut it = self.0.iter();
        let first = it.next().cloned().unwrap_or_default();
        it.fold(first, |acc, alt| acc.intersection(alt))
    }

    /// Removes `lits` from every alternative.
    pub fn without(&self, lits: &ConditionSet) -> AltConditions {
        Self::from_alternatives(self.0.iter().map(|a| a.difference(lits)))
            .expect("mapping preserves non-emptiness")
    }

    pub fn all_literals(&self) -> ConditionSet {
        let mut out = ConditionSet::new();
        for alt in &self.0 {
            out.extend(alt);
        }
        out
    }
}

impl std::ops::Index<usize> for AltConditions {
    type Output = ConditionSet;

    fn index(&self, index: usize) -> &ConditionSet {
        &self.0[index]
    }
}

impl Default for AltConditions {
    fn default() -> Self {
        Self::single(ConditionSet::new())
    }
}

impl From<ConditionSet> for AltConditions {
    fn from(set: ConditionSet) -> Self {
        Self::single(set)
    }
}

impl<'de> Deserialize<'de> for AltConditions {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let alts = Vec::<ConditionSet>::deserialize(deserializer)?;
        Self::from_alternatives(alts)
            .ok_or_else(|| serde::de::Error::custom("alternative list must not be empty"))
    }
}

impl<'a> IntoIterator for &'a AltConditions {
    type Item = &'a ConditionSet;
    type IntoIter = std::slice::Iter<'a, ConditionSet>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for AltConditions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        f.write_str("{ ")?;
        for (i, alt) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{alt}")?;
        }
        f.write_str(" }")
    }
}

/// Flips the polarity of every literal.
pub fn negate_set(s: &ConditionSet) -> ConditionSet {
    s.iter().map(Literal::negate).collect()
}

/// Reconciles a parent's immediate conditions with one child's cumulative
/// conditions: every child literal survives unless the parent demands its
/// negation.
pub fn rec(ie_parent: &ConditionSet, ce_child: &ConditionSet) -> ConditionSet {
    ce_child
        .iter()
        .filter(|l| !ie_parent.contains(&l.negate()))
        .cloned()
        .collect()
}

/// `required ⊆ superset_candidate`.
pub fn entails(superset_candidate: &ConditionSet, required: &ConditionSet) -> bool {
    required.is_subset(superset_candidate)
}

/// Child literals whose negation the parent demands.
pub fn conflict_set(ie_parent: &ConditionSet, ce_child: &ConditionSet) -> ConditionSet {
    ce_child.intersection(&negate_set(ie_parent))
}
