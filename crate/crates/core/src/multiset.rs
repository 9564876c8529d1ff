//! A multiset over an ordered key type, stored as key -> count.
//!
//! Iteration order is the key order, so every algorithm built on top is
//! deterministic. Zero counts are never stored.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Multiset<T: Ord> {
    counts: BTreeMap<T, u64>,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Multiset { counts: BTreeMap::new() }
    }
}

impl<T: Ord> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(item: T) -> Self {
        let mut m = Self::new();
        m.insert(item, 1);
        m
    }

    pub fn insert(&mut self, item: T, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(item).or_insert(0) += n;
    }

    /// Removes up to `n` occurrences; returns how many were actually removed.
    pub fn remove(&mut self, item: &T, n: u64) -> u64 {
        match self.counts.get_mut(item) {
            None => 0,
            Some(c) => {
                let taken = n.min(*c);
                *c -= taken;
                if *c == 0 {
                    self.counts.remove(item);
                }
                taken
            }
        }
    }

    pub fn count(&self, item: &T) -> u64 {
        self.counts.get(item).copied().unwrap_or(0)
    }

    pub fn contains(&self, item: &T) -> bool {
        self.count(item) > 0
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of occurrences.
    pub fn len(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Number of distinct keys.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }

    /// Iterates every occurrence, repeating keys by multiplicity.
    pub fn occurrences(&self) -> impl Iterator<Item = &T> {
        self.counts.iter().flat_map(|(k, &v)| std::iter::repeat(k).take(v as usize))
    }

    pub fn keys(&self) -> impl Iterator<Item = &T> {
        self.counts.keys()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|(k, n)| other.count(k) >= n)
    }
}

impl<T: Ord + Clone> Multiset<T> {
    /// Disjoint union: counts add up.
    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, n) in other.iter() {
            out.insert(k.clone(), n);
        }
        out
    }

    /// Multiset difference; `None` if `other` is not a subset of `self`.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let mut out = self.clone();
        for (k, n) in other.iter() {
            match out.counts.entry(k.clone()) {
                Entry::Vacant(_) => return None,
                Entry::Occupied(mut e) => {
                    if *e.get() < n {
                        return None;
                    }
                    *e.get_mut() -= n;
                    if *e.get() == 0 {
                        e.remove();
                    }
                }
            }
        }
        Some(out)
    }

    /// Saturating difference: removes what is present, ignores the rest.
    pub fn saturating_sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, n) in other.iter() {
            out.remove(k, n);
        }
        out
    }
}

impl<T: Ord> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Self::new();
        for item in iter {
            m.insert(item, 1);
        }
        m
    }
}

impl<T: Ord> FromIterator<(T, u64)> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = (T, u64)>>(iter: I) -> Self {
        let mut m = Self::new();
        for (item, n) in iter {
            m.insert(item, n);
        }
        m
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.counts.iter()).finish()
    }
}
