//! Jet coordinates and symmetrized multi-indices.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::Rational;

/// Sorted tuple of base-coordinate indices (zero based).
///
/// `u^α_{i1..il}` is symmetric in its lower indices, so the tuple is kept
/// nondecreasing and appending an index re-sorts it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn new<I: IntoIterator<Item = usize>>(entries: I) -> Self {
        let mut v: Vec<u8> = entries
            .into_iter()
            .map(|i| u8::try_from(i).expect("base index fits in u8"))
            .collect();
        v.sort_unstable();
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }

    /// The index with one more entry `i`.
    pub fn with(&self, i: usize) -> Self {
        let i = u8::try_from(i).expect("base index fits in u8");
        let pos = self.0.partition_point(|&e| e <= i);
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0[..pos]);
        v.push(i);
        v.extend_from_slice(&self.0[pos..]);
        MultiIndex(v)
    }

    /// Removes one occurrence of `i`, if present.
    pub fn without(&self, i: usize) -> Option<Self> {
        let pos = self.0.iter().position(|&e| e as usize == i)?;
        let mut v = self.0.clone();
        v.remove(pos);
        Some(MultiIndex(v))
    }

    pub fn max_entry(&self) -> Option<usize> {
        self.0.last().map(|&i| i as usize)
    }

    /// Multiplicities `l_r` of each base index `r < n`.
    pub fn multiplicities(&self, n: usize) -> Vec<usize> {
        let mut counts = vec![0; n];
        for i in self.entries() {
            counts[i] += 1;
        }
        counts
    }

    /// Number of distinct orderings, `l! / (l_1! ... l_n!)`.
    pub fn permutation_count(&self) -> BigInt {
        let mut count = factorial(self.len());
        let mut run = 0usize;
        for (k, e) in self.0.iter().enumerate() {
            run += 1;
            if k + 1 == self.0.len() || self.0[k + 1] != *e {
                count /= factorial(run);
                run = 0;
            }
        }
        count
    }

    /// Weight `l_1! ... l_n! / l!` of the weighted partial derivative.
    pub fn weight(&self) -> Rational {
        Rational::new(BigInt::one(), self.permutation_count())
    }

    /// All sorted multi-indices of length `len` over `n` base indices.
    pub fn all_of_length(n: usize, len: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(len);
        fn rec(n: usize, len: usize, start: usize, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
            if cur.len() == len {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for i in start..n {
                cur.push(i as u8);
                rec(n, len, i, cur, out);
                cur.pop();
            }
        }
        rec(n, len, 0, &mut cur, &mut out);
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// A coordinate on the jet space: `x^i` or `u^α_I`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    Base(u8),
    Fiber { alpha: u8, index: MultiIndex },
}

impl Var {
    pub fn base(i: usize) -> Self {
        Var::Base(u8::try_from(i).expect("base index fits in u8"))
    }

    pub fn fiber(alpha: usize, index: MultiIndex) -> Self {
        Var::Fiber {
            alpha: u8::try_from(alpha).expect("fiber index fits in u8"),
            index,
        }
    }

    /// Jet order of the coordinate; base coordinates have no order.
    pub fn order(&self) -> Option<usize> {
        match self {
            Var::Base(_) => None,
            Var::Fiber { index, .. } => Some(index.len()),
        }
    }

    pub fn is_fiber(&self) -> bool {
        matches!(self, Var::Fiber { .. })
    }
}

// graded lexicographic: base coordinates first, then (order, fiber, multi-index)
impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Var::Base(a), Var::Base(b)) => a.cmp(b),
            (Var::Base(_), Var::Fiber { .. }) => Ordering::Less,
            (Var::Fiber { .. }, Var::Base(_)) => Ordering::Greater,
            (
                Var::Fiber { alpha: a1, index: i1 },
                Var::Fiber { alpha: a2, index: i2 },
            ) => i1
                .len()
                .cmp(&i2.len())
                .then_with(|| a1.cmp(a2))
                .then_with(|| i1.cmp(i2)),
        }
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Display names for base and fiber coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Names {
    pub base: Vec<String>,
    pub fiber: Vec<String>,
}

impl Names {
    pub fn new(base: Vec<String>, fiber: Vec<String>) -> Self {
        Names { base, fiber }
    }

    /// Conventional names: `x, y, z, t` and `u, v, w`, numbered beyond that.
    pub fn default_for(n: usize, m: usize) -> Self {
        let base = match n {
            1..=4 => ["x", "y", "z", "t"][..n].iter().map(|s| s.to_string()).collect(),
            _ => (1..=n).map(|i| format!("x{i}")).collect(),
        };
        let fiber = match m {
            1..=3 => ["u", "v", "w"][..m].iter().map(|s| s.to_string()).collect(),
            _ => (1..=m).map(|a| format!("u{a}")).collect(),
        };
        Names { base, fiber }
    }

    pub fn var(&self, v: &Var) -> String {
        match v {
            Var::Base(i) => self.base[*i as usize].clone(),
            Var::Fiber { alpha, index } => {
                let mut s = self.fiber[*alpha as usize].clone();
                if !index.is_empty() {
                    s.push('_');
                    for i in index.entries() {
                        s.push_str(&self.base[i]);
                    }
                }
                s
            }
        }
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in self.entries() {
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}
