//! Finite multisets kept in canonical form.
//!
//! A [`Multiset`] is a sorted vector of `(element, count)` pairs in which no
//! count is zero. Two multisets with the same contents therefore compare,
//! order and hash identically, which is what lets markings serve as map keys.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Multiset<K> {
    entries: Vec<(K, u32)>,
}

impl<K: Ord + Copy> Multiset<K> {
    pub fn new() -> Self {
        Multiset {
            entries: Vec::new(),
        }
    }

    /// Builds a multiset from arbitrary `(element, count)` pairs. Repeated
    /// elements are summed and zero counts dropped.
    pub fn from_counts<I: IntoIterator<Item = (K, u32)>>(items: I) -> Self {
        let mut entries: Vec<(K, u32)> = items.into_iter().filter(|&(_, n)| n > 0).collect();
        entries.sort_by_key(|a| a.0);
        let mut out: Vec<(K, u32)> = Vec::with_capacity(entries.len());
        for (k, n) in entries {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += n,
                _ => out.push((k, n)),
            }
        }
        Multiset { entries: out }
    }

    /// Each element of the iterator contributes one occurrence.
    pub fn from_elems<I: IntoIterator<Item = K>>(items: I) -> Self {
        Self::from_counts(items.into_iter().map(|k| (k, 1)))
    }

    pub fn singleton(k: K) -> Self {
        Multiset {
            entries: vec![(k, 1)],
        }
    }

    pub fn get(&self, k: K) -> u32 {
        match self.entries.binary_search_by(|e| e.0.cmp(&k)) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn contains(&self, k: K) -> bool {
        self.get(k) > 0
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all counts.
    pub fn cardinality(&self) -> u32 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Number of distinct elements.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (K, u32)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = K> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn entries(&self) -> &[(K, u32)] {
        &self.entries
    }

    /// `self + other`.
    pub fn sum(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Multiset { entries: out }
    }

    /// Saturating difference: `(self - other)(k) = max(0, self(k) - other(k))`.
    pub fn difference(&self, other: &Self) -> Self {
        let entries = self
            .entries
            .iter()
            .filter_map(|&(k, n)| {
                let rest = n.saturating_sub(other.get(k));
                (rest > 0).then_some((k, rest))
            })
            .collect();
        Multiset { entries }
    }

    /// Pointwise `self(k) <= other(k)`.
    pub fn is_subset(&self, other: &Self) -> bool {
        let mut j = 0;
        let b = &other.entries;
        for &(k, n) in &self.entries {
            while j < b.len() && b[j].0 < k {
                j += 1;
            }
            if j == b.len() || b[j].0 != k || b[j].1 < n {
                return false;
            }
        }
        true
    }

    /// Image under `f`: `f[M](t) = sum of M(s) over all s with f(s) = t`.
    pub fn image<T: Ord + Copy, F: Fn(K) -> T>(&self, f: F) -> Multiset<T> {
        Multiset::from_counts(self.entries.iter().map(|&(k, n)| (f(k), n)))
    }

    /// Whether every count is at most one.
    pub fn is_set(&self) -> bool {
        self.entries.iter().all(|e| e.1 == 1)
    }

    /// Adds `n` occurrences of `k` in place.
    pub fn add(&mut self, k: K, n: u32) {
        if n == 0 {
            return;
        }
        match self.entries.binary_search_by(|e| e.0.cmp(&k)) {
            Ok(i) => self.entries[i].1 += n,
            Err(i) => self.entries.insert(i, (k, n)),
        }
    }
}

impl<K: Ord + Copy> FromIterator<K> for Multiset<K> {
    fn from_iter<I: IntoIterator<Item = K>>(iter: I) -> Self {
        Multiset::from_elems(iter)
    }
}

impl<K: fmt::Debug> fmt::Debug for Multiset<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, n)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k:?}:{n}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(items: &[(char, u32)]) -> Multiset<char> {
        Multiset::from_counts(items.iter().copied())
    }

    #[test]
    fn saturating_difference() {
        assert_eq!(
            ms(&[('p', 2)]).difference(&ms(&[('p', 1), ('q', 3)])),
            ms(&[('p', 1)])
        );
    }

    #[test]
    fn identities() {
        let e: Multiset<char> = Multiset::new();
        assert_eq!(e.sum(&e), e);
        let a = ms(&[('a', 3), ('b', 1)]);
        assert!(a.is_subset(&a));
        assert!(e.is_subset(&a));
        assert!(!a.is_subset(&e));
    }

    #[test]
    fn image_sums_preimages() {
        let m = ms(&[('p', 1), ('q', 2)]);
        let img = m.image(|_| 'x');
        assert_eq!(img, ms(&[('x', 3)]));
    }

    #[test]
    fn zero_counts_are_dropped() {
        let m = ms(&[('a', 0), ('b', 2), ('a', 0)]);
        assert_eq!(m.support_len(), 1);
        assert_eq!(m.cardinality(), 2);
        assert!(!m.contains('a'));
    }

    fn arb() -> impl Strategy<Value = Multiset<u8>> {
        prop::collection::vec((0u8..6, 0u32..4), 0..8).prop_map(Multiset::from_counts)
    }

    proptest! {
        #[test]
        fn pointwise_laws(a in arb(), b in arb()) {
            let s = a.sum(&b);
            let d = a.difference(&b);
            for k in 0u8..6 {
                prop_assert_eq!(s.get(k), a.get(k) + b.get(k));
                prop_assert_eq!(d.get(k), a.get(k).saturating_sub(b.get(k)));
            }
            prop_assert!(s.entries().iter().all(|e| e.1 > 0));
            prop_assert!(d.entries().iter().all(|e| e.1 > 0));
            prop_assert_eq!(a.is_subset(&b), (0u8..6).all(|k| a.get(k) <= b.get(k)));
            prop_assert!(a.is_subset(&s));
            prop_assert_eq!(s.difference(&b), a);
        }
    }
}
