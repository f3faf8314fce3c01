//! Finite multisets with occurrence-additive union.

use std::collections::BTreeMap;
use std::fmt;

/// A finite collection in which elements may occur more than once.
///
/// Only elements with a positive occurrence are stored, so two multisets are
/// equal exactly when every element occurs equally often in both.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Multiset<T: Ord> {
    counts: BTreeMap<T, usize>,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Self {
            counts: BTreeMap::new(),
        }
    }
}

impl<T: Ord> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of times `value` occurs; zero when absent.
    pub fn occurrence(&self, value: &T) -> usize {
        self.counts.get(value).copied().unwrap_or(0)
    }

    pub fn contains(&self, value: &T) -> bool {
        self.counts.contains_key(value)
    }

    /// Adds `n` occurrences of `value`.
    pub fn insert_n(&mut self, value: T, n: usize) {
        if n > 0 {
            *self.counts.entry(value).or_insert(0) += n;
        }
    }

    pub fn insert(&mut self, value: T) {
        self.insert_n(value, 1);
    }

    /// Removes up to `n` occurrences of `value` and returns how many were removed.
    pub fn remove_n(&mut self, value: &T, n: usize) -> usize {
        let Some(count) = self.counts.get_mut(value) else {
            return 0;
        };
        let removed = n.min(*count);
        *count -= removed;
        if *count == 0 {
            self.counts.remove(value);
        }
        removed
    }

    /// Total number of occurrences.
    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn distinct_len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Distinct elements with their occurrences.
    pub fn iter(&self) -> impl Iterator<Item = (&T, usize)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Every occurrence, repeated as often as it occurs.
    pub fn iter_occurrences(&self) -> impl Iterator<Item = &T> {
        self.counts
            .iter()
            .flat_map(|(k, &v)| std::iter::repeat(k).take(v))
    }

    /// True when no element occurs more often here than in `other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.counts
            .iter()
            .all(|(k, &v)| v <= other.occurrence(k))
    }
}

impl<T: Ord + Clone> Multiset<T> {
    /// Union that adds occurrences.
    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.insert_n(k.clone(), v);
        }
        out
    }
}

impl<T: Ord> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut out = Self::new();
        for v in iter {
            out.insert(v);
        }
        out
    }
}

impl<T: Ord> Extend<T> for Multiset<T> {
    fn extend<I: IntoIterator<Item = T>>(&mut self, iter: I) {
        for v in iter {
            self.insert(v);
        }
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter_occurrences()).finish()
    }
}
