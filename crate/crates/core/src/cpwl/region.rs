use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Identifies one linear region of a piecewise-linear function. Two inputs
/// with equal ids share one affine law.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionId {
    /// Cell index of an explicit partition.
    Cell(usize),
    /// Hidden-unit activation pattern of a ReLU network (`true` = active).
    Pattern(Vec<bool>),
    /// One inner region per permutation of a symmetrized function.
    Product(Vec<RegionId>),
}

/// The set of regions whose closure contains a point.
///
/// Symmetrized functions report one factor per permutation; the set is the
/// Cartesian product of the factors and is never materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionSet {
    Finite(BTreeSet<RegionId>),
    Product(Vec<RegionSet>),
}

impl RegionSet {
    pub fn single(id: RegionId) -> Self {
        RegionSet::Finite(BTreeSet::from([id]))
    }

    /// Number of regions (saturating).
    pub fn len(&self) -> usize {
        match self {
            RegionSet::Finite(s) => s.len(),
            RegionSet::Product(f) => f.iter().fold(1usize, |acc, s| acc.saturating_mul(s.len())),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: &RegionId) -> bool {
        match (self, id) {
            (RegionSet::Finite(s), _) => s.contains(id),
            (RegionSet::Product(f), RegionId::Product(ids)) => {
                f.len() == ids.len() && f.iter().zip(ids).all(|(s, i)| s.contains(i))
            }
            _ => false,
        }
    }

    pub fn is_subset(&self, other: &RegionSet) -> bool {
        match (self, other) {
            (RegionSet::Finite(a), RegionSet::Finite(b)) => a.is_subset(b),
            (RegionSet::Product(a), RegionSet::Product(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.is_subset(y))
            }
            _ => false,
        }
    }

    /// The unique region, if there is exactly one.
    pub fn only(&self) -> Option<RegionId> {
        match self {
            RegionSet::Finite(s) if s.len() == 1 => s.iter().next().cloned(),
            RegionSet::Finite(_) => None,
            RegionSet::Product(f) => f
                .iter()
                .map(RegionSet::only)
                .collect::<Option<Vec<_>>>()
                .map(RegionId::Product),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_sets() {
        let a = RegionSet::Finite(BTreeSet::from([RegionId::Cell(0), RegionId::Cell(1)]));
        let b = RegionSet::single(RegionId::Cell(0));
        let p = RegionSet::Product(vec![a.clone(), b.clone()]);
        let q = RegionSet::Product(vec![b.clone(), b.clone()]);
        assert_eq!(p.len(), 2);
        assert!(q.is_subset(&p));
        assert!(!p.is_subset(&q));
        assert_eq!(
            q.only(),
            Some(RegionId::Product(vec![RegionId::Cell(0), RegionId::Cell(0)]))
        );
        assert_eq!(p.only(), None);
        assert!(p.contains(&RegionId::Product(vec![RegionId::Cell(1), RegionId::Cell(0)])));
    }
}
