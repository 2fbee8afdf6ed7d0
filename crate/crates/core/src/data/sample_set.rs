use std::fmt;

use serde::{Deserialize, Serialize};

/// A sorted, duplicate-free set of sample indices.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleSet(Vec<usize>);

impl SampleSet {
    pub fn empty() -> Self {
        SampleSet(Vec::new())
    }

    /// `{0, 1, ..., n - 1}`.
    pub fn full(n: usize) -> Self {
        SampleSet((0..n).collect())
    }

    /// Builds a set from arbitrary indices, sorting and removing duplicates.
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SampleSet(indices)
    }

    /// Wraps an already strictly increasing vector.
    ///
    /// Panics in debug builds when the input is not strictly increasing.
    pub fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(
            indices.windows(2).all(|w| w[0] < w[1]),
            "sample indices must be strictly increasing"
        );
        SampleSet(indices)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn is_subset(&self, other: &SampleSet) -> bool {
        let mut it = other.0.iter().peekable();
        'outer: for &x in &self.0 {
            while let Some(&&y) = it.peek() {
                if y < x {
                    it.next();
                } else if y == x {
                    it.next();
                    continue 'outer;
                } else {
                    return false;
                }
            }
            return false;
        }
        true
    }

    pub fn union(&self, other: &SampleSet) -> SampleSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        SampleSet(out)
    }

    pub fn intersection(&self, other: &SampleSet) -> SampleSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len().min(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        SampleSet(out)
    }

    /// `self \ other`.
    pub fn difference(&self, other: &SampleSet) -> SampleSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len());
        let mut j = 0;
        for &x in a {
            while j < b.len() && b[j] < x {
                j += 1;
            }
            if j >= b.len() || b[j] != x {
                out.push(x);
            }
        }
        SampleSet(out)
    }
}

impl fmt::Debug for SampleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl FromIterator<usize> for SampleSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        SampleSet::from_indices(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a SampleSet {
    type Item = &'a usize;
    type IntoIter = std::slice::Iter<'a, usize>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn set_strategy() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..40, 0..30)
    }

    proptest! {
        #[test]
        fn set_ops_match_btreeset(a in set_strategy(), b in set_strategy()) {
            let (sa, sb) = (SampleSet::from_indices(a.clone()), SampleSet::from_indices(b.clone()));
            let (ba, bb): (BTreeSet<usize>, BTreeSet<usize>) =
                (a.into_iter().collect(), b.into_iter().collect());
            prop_assert_eq!(sa.union(&sb).into_vec(), ba.union(&bb).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.intersection(&sb).into_vec(), ba.intersection(&bb).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.difference(&sb).into_vec(), ba.difference(&bb).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.is_subset(&sb), ba.is_subset(&bb));
        }
    }

    #[test]
    fn from_indices_canonicalizes() {
        let s = SampleSet::from_indices(vec![3, 1, 3, 0]);
        assert_eq!(s.as_slice(), &[0, 1, 3]);
        assert!(s.contains(3));
        assert!(!s.contains(2));
    }
}
