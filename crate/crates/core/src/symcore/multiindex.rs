use std::cmp::Ordering;
use std::fmt;

/// Symmetric multi-index: a nondecreasing list of 1-based independent
/// variable indices. Ordered by length first, then lexicographically.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(mut entries: Vec<usize>) -> Self {
        assert!(entries.iter().all(|&i| i >= 1), "multi-index entries are 1-based");
        entries.sort_unstable();
        MultiIndex(entries)
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    /// `J + i`.
    pub fn with(&self, i: usize) -> Self {
        let mut e = self.0.clone();
        let pos = e.partition_point(|&x| x <= i);
        e.insert(pos, i);
        MultiIndex(e)
    }

    /// `J - i`, when `i` occurs in `J`.
    pub fn without(&self, i: usize) -> Option<Self> {
        let pos = self.0.iter().position(|&x| x == i)?;
        let mut e = self.0.clone();
        e.remove(pos);
        Some(MultiIndex(e))
    }

    pub fn max_entry(&self) -> usize {
        self.0.last().copied().unwrap_or(0)
    }

    /// How many times `i` occurs.
    pub fn count(&self, i: usize) -> usize {
        self.0.iter().filter(|&&x| x == i).count()
    }

    /// Every multi-index over `k` variables of exactly order `r`.
    pub fn of_order(k: usize, r: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(r);
        fn rec(k: usize, r: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if cur.len() == r {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for i in start..=k {
                cur.push(i);
                rec(k, r, i, cur, out);
                cur.pop();
            }
        }
        rec(k, r, 1, &mut cur, &mut out);
        out
    }

    /// Every multi-index over `k` variables with order at most `r`.
    pub fn up_to(k: usize, r: usize) -> Vec<MultiIndex> {
        (0..=r).flat_map(|n| Self::of_order(k, n)).collect()
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_and_extends() {
        let j = MultiIndex::new(vec![2, 1]);
        assert_eq!(j.entries(), &[1, 2]);
        assert_eq!(j.with(1).entries(), &[1, 1, 2]);
        assert_eq!(j.without(2), Some(MultiIndex::new(vec![1])));
        assert_eq!(j.without(3), None);
    }

    #[test]
    fn counts_match_binomials() {
        // C(k + r - 1, r) indices of order r
        assert_eq!(MultiIndex::of_order(2, 3).len(), 4);
        assert_eq!(MultiIndex::of_order(3, 2).len(), 6);
        assert_eq!(MultiIndex::up_to(2, 2).len(), 6);
        assert_eq!(MultiIndex::up_to(1, 4).len(), 5);
    }

    #[test]
    fn graded_order() {
        let a = MultiIndex::new(vec![2]);
        let b = MultiIndex::new(vec![1, 1]);
        assert!(a < b);
        assert!(MultiIndex::empty() < a);
    }
}
