use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

/// A tuple of non-negative integers indexing a mixed partial derivative.
///
/// The derived `Ord` is lexicographic on the entries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(arity: usize) -> Self {
        MultiIndex(vec![0; arity])
    }

    pub fn unit(i: usize, arity: usize) -> Self {
        let mut v = vec![0; arity];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    /// `|alpha|`, the total order.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `alpha! = prod alpha_i!`
    pub fn factorial(&self) -> BigUint {
        self.0
            .iter()
            .fold(BigUint::one(), |acc, &a| acc * factorial(a))
    }

    /// Componentwise partial order.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.arity(), other.arity());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, k: u32) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| a * k).collect())
    }

    /// Every `beta <= self`, in lexicographic order.
    pub fn lower_set(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::with_capacity(self.arity())];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=a).map(move |b| {
                        let mut p = prefix.clone();
                        p.push(b);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(MultiIndex).collect()
    }

    /// All multi-indices of the given arity and exact order, largest first
    /// coordinate first: `(2,0), (1,1), (0,2)`.
    pub fn with_order(arity: usize, order: u32) -> Vec<MultiIndex> {
        if arity == 0 {
            return if order == 0 {
                vec![MultiIndex(vec![])]
            } else {
                vec![]
            };
        }
        let mut out = Vec::new();
        for first in (0..=order).rev() {
            for rest in Self::with_order(arity - 1, order - first) {
                let mut v = Vec::with_capacity(arity);
                v.push(first);
                v.extend_from_slice(&rest.0);
                out.push(MultiIndex(v));
            }
        }
        out
    }

    /// Graded enumeration of every `|alpha| <= max_order`.
    pub fn up_to_order(arity: usize, max_order: u32) -> Vec<MultiIndex> {
        (0..=max_order)
            .flat_map(|k| Self::with_order(arity, k))
            .collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub(crate) fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Every ordered `m`-tuple `(beta_1, ..., beta_m)` with `sum beta_r = alpha`,
/// each exactly once.
pub fn enumerate_compositions(alpha: &MultiIndex, m: usize) -> Vec<Vec<MultiIndex>> {
    assert!(m >= 1, "at least one part");
    if m == 1 {
        return vec![vec![alpha.clone()]];
    }
    let mut out = Vec::new();
    for beta in alpha.lower_set() {
        let rest = alpha.checked_sub(&beta).expect("beta <= alpha");
        for mut tail in enumerate_compositions(&rest, m - 1) {
            tail.insert(0, beta.clone());
            out.push(tail);
        }
    }
    out
}
