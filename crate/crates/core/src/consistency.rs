use crate::lexicon::{DataPractice, Operation};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Pattern {
    Intersection,
    Separation,
    #[serde(rename = "Overlap(Uninformed)")]
    OverlapUninformed,
    #[serde(rename = "Overlap(Redundant)")]
    OverlapRedundant,
    #[serde(rename = "Overlap(Consistent)")]
    OverlapConsistent,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [
        Pattern::Intersection,
        Pattern::Separation,
        Pattern::OverlapUninformed,
        Pattern::OverlapRedundant,
        Pattern::OverlapConsistent,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Pattern::Intersection => "Intersection",
            Pattern::Separation => "Separation",
            Pattern::OverlapUninformed => "Overlap(Uninformed)",
            Pattern::OverlapRedundant => "Overlap(Redundant)",
            Pattern::OverlapConsistent => "Overlap(Consistent)",
        }
    }

    /// The pattern seen from the other side.
    pub fn swapped(self) -> Pattern {
        match self {
            Pattern::OverlapUninformed => Pattern::OverlapRedundant,
            Pattern::OverlapRedundant => Pattern::OverlapUninformed,
            p => p,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Strength {
    #[serde(rename = "-")]
    None,
    Strong,
    Weak,
    #[serde(rename = "Strong&Weak")]
    StrongAndWeak,
}

impl Strength {
    pub fn label(self) -> &'static str {
        match self {
            Strength::None => "-",
            Strength::Strong => "Strong",
            Strength::Weak => "Weak",
            Strength::StrongAndWeak => "Strong&Weak",
        }
    }
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Set relation between a code-side and a policy-side set.
///
/// Both empty counts as consistent, an empty policy side as uninformed and
/// an empty code side as redundant.
pub fn pattern_of<T: Ord>(code: &BTreeSet<T>, policy: &BTreeSet<T>) -> Pattern {
    if code == policy {
        Pattern::OverlapConsistent
    } else if policy.is_subset(code) {
        Pattern::OverlapUninformed
    } else if code.is_subset(policy) {
        Pattern::OverlapRedundant
    } else if code.is_disjoint(policy) {
        Pattern::Separation
    } else {
        Pattern::Intersection
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyResult {
    pub pattern: Pattern,
    pub strength: Strength,
    /// Types found only in code.
    pub strong_uninformed: BTreeSet<String>,
    /// Types found only in the policy.
    pub strong_redundant: BTreeSet<String>,
    /// Practices in code but not in the policy, for types on both sides.
    pub weak_uninformed: BTreeSet<DataPractice>,
    /// Practices in the policy but not in code, for types on both sides.
    pub weak_redundant: BTreeSet<DataPractice>,
    pub code_set: BTreeSet<DataPractice>,
    pub policy_set: BTreeSet<DataPractice>,
}

impl ConsistencyResult {
    pub fn finding_count(&self) -> usize {
        self.strong_uninformed.len()
            + self.strong_redundant.len()
            + self.weak_uninformed.len()
            + self.weak_redundant.len()
    }
}

fn by_type(set: &BTreeSet<DataPractice>) -> BTreeMap<&str, BTreeSet<Operation>> {
    let mut m: BTreeMap<&str, BTreeSet<Operation>> = BTreeMap::new();
    for p in set {
        m.entry(p.data_type.as_str()).or_default().insert(p.operation);
    }
    m
}

/// Classifies the relation between code and policy practice sets and
/// grades the differences. A type present on one side only is a strong
/// finding; an operation missing on one side for a type present on both is
/// a weak finding.
pub fn compare(code: &BTreeSet<DataPractice>, policy: &BTreeSet<DataPractice>) -> ConsistencyResult {
    let (c, p) = (by_type(code), by_type(policy));
    let strong = |a: &BTreeMap<&str, _>, b: &BTreeMap<&str, _>| -> BTreeSet<String> {
        a.keys()
            .filter(|t| !b.contains_key(*t))
            .map(|t| t.to_string())
            .collect()
    };
    let weak = |a: &BTreeSet<DataPractice>, b: &BTreeSet<DataPractice>, other: &BTreeMap<&str, _>| {
        a.difference(b)
            .filter(|d| other.contains_key(d.data_type.as_str()))
            .cloned()
            .collect::<BTreeSet<_>>()
    };
    let strong_uninformed = strong(&c, &p);
    let strong_redundant = strong(&p, &c);
    let weak_uninformed = weak(code, policy, &p);
    let weak_redundant = weak(policy, code, &c);
    let has_strong = !strong_uninformed.is_empty() || !strong_redundant.is_empty();
    let has_weak = !weak_uninformed.is_empty() || !weak_redundant.is_empty();
    let strength = match (has_strong, has_weak) {
        (false, false) => Strength::None,
        (true, false) => Strength::Strong,
        (false, true) => Strength::Weak,
        (true, true) => Strength::StrongAndWeak,
    };
    ConsistencyResult {
        pattern: pattern_of(code, policy),
        strength,
        strong_uninformed,
        strong_redundant,
        weak_uninformed,
        weak_redundant,
        code_set: code.clone(),
        policy_set: policy.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Projections {
    pub practices: Pattern,
    pub types: Pattern,
    pub operations: Pattern,
}

/// The pattern rule applied to full tuples, to types only and to
/// operations only.
pub fn compare_projections(code: &BTreeSet<DataPractice>, policy: &BTreeSet<DataPractice>) -> Projections {
    let types = |s: &BTreeSet<DataPractice>| s.iter().map(|p| p.data_type.clone()).collect::<BTreeSet<_>>();
    let ops = |s: &BTreeSet<DataPractice>| s.iter().map(|p| p.operation).collect::<BTreeSet<_>>();
    Projections {
        practices: pattern_of(code, policy),
        types: pattern_of(&types(code), &types(policy)),
        operations: pattern_of(&ops(code), &ops(policy)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Operation::*;

    fn set(items: &[(&str, &[Operation])]) -> BTreeSet<DataPractice> {
        items
            .iter()
            .flat_map(|(t, ops)| ops.iter().map(|o| DataPractice::new(*t, *o)))
            .collect()
    }

    #[test]
    fn empty_conventions() {
        let e = BTreeSet::new();
        let x = set(&[("album", &[Collect])]);
        assert_eq!(compare(&e, &e).pattern, Pattern::OverlapConsistent);
        assert_eq!(compare(&e, &e).strength, Strength::None);
        assert_eq!(compare(&x, &e).pattern, Pattern::OverlapUninformed);
        assert_eq!(compare(&e, &x).pattern, Pattern::OverlapRedundant);
    }

    #[test]
    fn weak_only() {
        let c = set(&[("location", &[Collect, Send])]);
        let p = set(&[("location", &[Collect])]);
        let r = compare(&c, &p);
        assert_eq!(r.pattern, Pattern::OverlapUninformed);
        assert_eq!(r.strength, Strength::Weak);
        assert_eq!(r.weak_uninformed, set(&[("location", &[Send])]));
        assert!(r.strong_uninformed.is_empty());
    }

    #[test]
    fn serialized_as_labels() {
        for p in Pattern::ALL {
            assert_eq!(serde_json::to_value(p).unwrap(), p.label());
        }
        assert_eq!(serde_json::to_value(Strength::StrongAndWeak).unwrap(), "Strong&Weak");
        assert_eq!(serde_json::to_value(Strength::None).unwrap(), "-");
    }

    #[test]
    fn projections() {
        let c = set(&[("location", &[Collect]), ("album", &[Use])]);
        let p = set(&[("location", &[Use])]);
        let pr = compare_projections(&c, &p);
        assert_eq!(pr.practices, Pattern::Separation);
        assert_eq!(pr.types, Pattern::OverlapUninformed);
        assert_eq!(pr.operations, Pattern::OverlapUninformed);
        let same = compare_projections(&c, &c);
        assert_eq!(
            (same.practices, same.types, same.operations),
            (
                Pattern::OverlapConsistent,
                Pattern::OverlapConsistent,
                Pattern::OverlapConsistent
            )
        );
    }
}
