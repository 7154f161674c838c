use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric multi-index set `Λ` stored through its half-set.
///
/// `half[0]` is always the zero index. The full set is `half ∪ (−half)` and
/// `half ∩ (−half) = {0}`, so `|Λ| = 2·|half| − 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "IndexSetRepr", into = "IndexSetRepr")]
pub struct IndexSet {
    dim: usize,
    half: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexSetRepr {
    dim: usize,
    half: Vec<Vec<i64>>,
}

impl TryFrom<IndexSetRepr> for IndexSet {
    type Error = Error;

    fn try_from(r: IndexSetRepr) -> Result<Self> {
        IndexSet::from_half(r.dim, r.half)
    }
}

impl From<IndexSet> for IndexSetRepr {
    fn from(s: IndexSet) -> Self {
        IndexSetRepr {
            dim: s.dim,
            half: s.half,
        }
    }
}

/// True when the first nonzero entry of `k` is positive.
pub fn is_positive_half(k: &[i64]) -> bool {
    k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

pub(crate) fn negate(k: &[i64]) -> Vec<i64> {
    k.iter().map(|&x| -x).collect()
}

pub(crate) fn l1(k: &[i64]) -> i64 {
    k.iter().map(|x| x.abs()).sum()
}

// Zero first, then by l1 norm, then lexicographically descending.
fn half_order(a: &Vec<i64>, b: &Vec<i64>) -> Ordering {
    l1(a).cmp(&l1(b)).then_with(|| b.cmp(a))
}

impl IndexSet {
    /// Builds an index set from an explicit half-set.
    ///
    /// The half-set must start with the zero index and must not contain both
    /// `k` and `−k` for any nonzero `k`. Its order is kept as given.
    pub fn from_half(dim: usize, half: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidIndexSet(
                "dimension must be at least 1".into(),
            ));
        }
        let Some(first) = half.first() else {
            return Err(Error::InvalidIndexSet("half-set is empty".into()));
        };
        if first.iter().any(|&x| x != 0) {
            return Err(Error::InvalidIndexSet(
                "the first element of the half-set must be the zero index".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for k in &half {
            if k.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.len(),
                });
            }
            if !seen.insert(k.clone()) {
                return Err(Error::InvalidIndexSet(format!("duplicate index {k:?}")));
            }
        }
        for k in half.iter().skip(1) {
            if k.iter().all(|&x| x == 0) {
                return Err(Error::InvalidIndexSet("zero index repeated".into()));
            }
            if seen.contains(&negate(k)) {
                return Err(Error::InvalidIndexSet(format!(
                    "both {k:?} and its negative are in the half-set"
                )));
            }
        }
        Ok(IndexSet { dim, half })
    }

    /// Full box `{k : |k_j| ≤ n_j}`.
    pub fn box_set(n: &[usize]) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::InvalidIndexSet(
                "dimension must be at least 1".into(),
            ));
        }
        let dim = n.len();
        let mut all: Vec<Vec<i64>> = vec![Vec::with_capacity(dim)];
        for &nj in n {
            let nj = nj as i64;
            all = all
                .into_iter()
                .flat_map(|prefix| {
                    (-nj..=nj).map(move |x| {
                        let mut k = prefix.clone();
                        k.push(x);
                        k
                    })
                })
                .collect();
        }
        Ok(Self::from_full_unchecked(dim, all))
    }

    /// `Λ = plus − plus = {x − y : x, y ∈ plus}`.
    pub fn difference_set(plus: &[Vec<i64>]) -> Result<Self> {
        let Some(first) = plus.first() else {
            return Err(Error::InvalidIndexSet("empty generating set".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidIndexSet(
                "dimension must be at least 1".into(),
            ));
        }
        if let Some(bad) = plus.iter().find(|k| k.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let diffs = plus
            .iter()
            .flat_map(|x| {
                plus.iter()
                    .map(move |y| x.iter().zip(y).map(|(a, b)| a - b).collect())
            })
            .collect();
        Ok(Self::from_full_unchecked(dim, diffs))
    }

    // `all` must be closed under negation (possibly with repeats).
    fn from_full_unchecked(dim: usize, all: Vec<Vec<i64>>) -> Self {
        let nonzero: BTreeSet<Vec<i64>> = all.into_iter().filter(|k| is_positive_half(k)).collect();
        let mut rest: Vec<Vec<i64>> = nonzero.into_iter().collect();
        rest.sort_by(half_order);
        let mut half = Vec::with_capacity(rest.len() + 1);
        half.push(vec![0; dim]);
        half.extend(rest);
        IndexSet { dim, half }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The half-set, zero index first.
    pub fn half(&self) -> &[Vec<i64>] {
        &self.half
    }

    pub fn half_len(&self) -> usize {
        self.half.len()
    }

    /// `|Λ|`.
    pub fn full_len(&self) -> usize {
        2 * self.half.len() - 1
    }

    /// Every index of `Λ` paired with the position of its representative in the half-set.
    pub fn full(&self) -> Vec<(Vec<i64>, usize)> {
        let mut out = Vec::with_capacity(self.full_len());
        out.push((self.half[0].clone(), 0));
        for (j, k) in self.half.iter().enumerate().skip(1) {
            out.push((k.clone(), j));
            out.push((negate(k), j));
        }
        out
    }

    /// Position in the half-set of `k` or `−k`.
    pub fn position(&self, k: &[i64]) -> Option<usize> {
        let neg = negate(k);
        self.half
            .iter()
            .position(|h| h.as_slice() == k || *h == neg)
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim && self.position(k).is_some()
    }

    /// `Σ_{k∈Λ} ‖k‖₁` over the full set.
    pub fn l1_total(&self) -> i64 {
        2 * self.half.iter().map(|k| l1(k)).sum::<i64>()
    }

    /// `max_{k∈Λ} |k_j|` for each axis.
    pub fn max_abs_per_axis(&self) -> Vec<i64> {
        (0..self.dim)
            .map(|j| self.half.iter().map(|k| k[j].abs()).max().unwrap_or(0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_box(n: &[i64]) -> BTreeSet<Vec<i64>> {
        let mut out = BTreeSet::new();
        fn rec(n: &[i64], prefix: &mut Vec<i64>, out: &mut BTreeSet<Vec<i64>>) {
            if prefix.len() == n.len() {
                out.insert(prefix.clone());
                return;
            }
            let nj = n[prefix.len()];
            for x in -nj..=nj {
                prefix.push(x);
                rec(n, prefix, out);
                prefix.pop();
            }
        }
        rec(n, &mut Vec::new(), &mut out);
        out
    }

    fn full_set(s: &IndexSet) -> BTreeSet<Vec<i64>> {
        s.full().into_iter().map(|(k, _)| k).collect()
    }

    #[test]
    fn smallest_box() {
        let s = IndexSet::box_set(&[1]).unwrap();
        assert_eq!(s.half(), &[vec![0], vec![1]]);
        assert_eq!(
            full_set(&s),
            [vec![-1], vec![0], vec![1]].into_iter().collect()
        );
    }

    #[test]
    fn cube_box_sizes() {
        let s = IndexSet::box_set(&[1, 1, 1]).unwrap();
        assert_eq!(s.full_len(), 27);
        assert_eq!(s.half_len(), 14);
        assert_eq!(full_set(&s), brute_box(&[1, 1, 1]));
    }

    #[test]
    fn box_matches_enumeration() {
        for n in [vec![2usize], vec![2, 1], vec![0, 3], vec![1, 2, 1]] {
            let s = IndexSet::box_set(&n).unwrap();
            let ni: Vec<i64> = n.iter().map(|&x| x as i64).collect();
            assert_eq!(full_set(&s), brute_box(&ni));
            assert_eq!(s.full_len(), full_set(&s).len());
            for k in s.half().iter().skip(1) {
                assert!(is_positive_half(k));
            }
        }
    }

    #[test]
    fn three_d_difference_set() {
        let plus = vec![vec![0, 0, 0], vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let s = IndexSet::difference_set(&plus).unwrap();
        assert_eq!(s.half_len(), 7);
        assert_eq!(s.half_len() - 1 + s.half_len(), 13);
        for k in [vec![1, -1, 0], vec![1, 0, -1], vec![0, 1, -1]] {
            assert!(s.half().contains(&k), "{k:?}");
        }
        for k in &plus {
            assert!(s.half().contains(k));
        }
    }

    #[test]
    fn difference_set_small_cases() {
        let s = IndexSet::difference_set(&[vec![0]]).unwrap();
        assert_eq!(s.full_len(), 1);

        let s = IndexSet::difference_set(&[vec![0], vec![1]]).unwrap();
        let brute: BTreeSet<Vec<i64>> = [0i64, 1]
            .iter()
            .flat_map(|x| [0i64, 1].iter().map(move |y| vec![x - y]))
            .collect();
        assert_eq!(full_set(&s), brute);

        assert!(IndexSet::difference_set(&[]).is_err());
        assert!(IndexSet::difference_set(&[vec![0, 0], vec![1]]).is_err());
    }

    #[test]
    fn from_half_validation() {
        assert!(IndexSet::from_half(1, vec![vec![0], vec![1]]).is_ok());
        assert!(IndexSet::from_half(1, vec![vec![1], vec![0]]).is_err());
        assert!(IndexSet::from_half(1, vec![vec![0], vec![1], vec![-1]]).is_err());
        assert!(IndexSet::from_half(2, vec![vec![0, 0], vec![1]]).is_err());
        assert!(IndexSet::from_half(1, vec![vec![0], vec![2], vec![2]]).is_err());
    }

    #[test]
    fn l1_total_and_position() {
        let s = IndexSet::box_set(&[1]).unwrap();
        assert_eq!(s.l1_total(), 2);
        assert_eq!(s.position(&[-1]), Some(1));
        assert!(s.contains(&[0]));
        assert!(!s.contains(&[2]));
    }

    #[test]
    fn serde_round_trip_validates() {
        let s = IndexSet::box_set(&[1, 1]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: IndexSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"dim":1,"half":[[0],[1],[-1]]}"#;
        assert!(serde_json::from_str::<IndexSet>(bad).is_err());
    }
}
