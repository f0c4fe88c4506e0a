use std::fmt;

use serde::{Deserialize, Serialize};

use crate::condition::{AltConditions, ConditionSet};

/// Missing immediate conditions for one cumulative alternative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeficiencyEntry {
    pub alternative: usize,
    pub missing: ConditionSet,
}

/// `IE(M) ∖ CE_i` for every cumulative alternative, in alternative order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeficiencyList {
    pub entries: Vec<DeficiencyEntry>,
}

impl DeficiencyList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when every alternative already entails the immediate conditions.
    pub fn is_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.missing.is_empty())
    }

    /// Entries with at least one missing literal.
    pub fn failing(&self) -> impl Iterator<Item = &DeficiencyEntry> + '_ {
        self.entries.iter().filter(|e| !e.missing.is_empty())
    }
}

pub fn deficiency(ie: &ConditionSet, ce: &AltConditions) -> DeficiencyList {
    DeficiencyList {
        entries: ce
            .iter()
            .enumerate()
            .map(|(alternative, alt)| DeficiencyEntry {
                alternative,
                missing: ie.difference(alt),
            })
            .collect(),
    }
}

/// For each missing literal of one deficiency entry, the 1-based index of
/// another alternative containing it, or 0 when no alternative does.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AvailabilityTuple(pub Vec<usize>);

impl AvailabilityTuple {
    pub fn all_zero(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }
}

impl fmt::Display for AvailabilityTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Availability tuples aligned with `d.entries`; the literals of each entry
/// are visited in set order. When several alternatives carry a literal the
/// smallest index wins.
pub fn availability(d: &DeficiencyList, ce: &AltConditions) -> Vec<AvailabilityTuple> {
    d.entries
        .iter()
        .map(|entry| {
            AvailabilityTuple(
                entry
                    .missing
                    .iter()
                    .map(|lit| {
                        ce.iter()
                            .enumerate()
                            .find(|(r, alt)| *r != entry.alternative && alt.contains(lit))
                            .map_or(0, |(r, _)| r + 1)
                    })
                    .collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(s: &str) -> ConditionSet {
        ConditionSet::parse(s).unwrap()
    }

    #[test]
    fn or_case_with_nothing_available() {
        let ce = AltConditions::from_alternatives([set("p !q s"), set("p !q r")]).unwrap();
        let d = deficiency(&set("p !q w"), &ce);
        assert_eq!(d.entries[0].missing, set("w"));
        assert_eq!(d.entries[1].missing, set("w"));
        let a = availability(&d, &ce);
        assert_eq!(
            a,
            vec![AvailabilityTuple(vec![0]), AvailabilityTuple(vec![0])]
        );
        assert_eq!(a[0].to_string(), "(0)");
    }

    #[test]
    fn literal_found_in_second_alternative() {
        let ce = AltConditions::from_alternatives([set("p"), set("p w"), set("w")]).unwrap();
        let d = deficiency(&set("p w"), &ce);
        assert_eq!(availability(&d, &ce)[0], AvailabilityTuple(vec![2]));
        assert!(availability(&d, &ce)[1].0.is_empty());
    }

    #[test]
    fn satisfied_alternative_has_empty_entry() {
        let ce = AltConditions::single(set("a b"));
        let d = deficiency(&set("a"), &ce);
        assert!(d.is_satisfied());
        assert_eq!(d.failing().count(), 0);
    }
}
