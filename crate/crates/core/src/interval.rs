//! Finite unions of half-open rational intervals inside `[0, 1)`.

use std::fmt;

use num_traits::{One, Zero};

use crate::rational::Rational;

/// Sorted, pairwise disjoint, non-adjacent intervals `[a, b)` with
/// `0 ≤ a < b ≤ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalUnion {
    parts: Vec<(Rational, Rational)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion::default()
    }

    pub fn full() -> Self {
        IntervalUnion {
            parts: vec![(Rational::zero(), Rational::one())],
        }
    }

    /// Clips every `[a, b)` to `[0, 1)`, drops empty pieces and merges
    /// overlapping or touching ones.
    pub fn from_intervals<I>(intervals: I) -> Self
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        let zero = Rational::zero();
        let one = Rational::one();
        let mut raw: Vec<(Rational, Rational)> = intervals
            .into_iter()
            .map(|(a, b)| (a.max(zero.clone()), b.min(one.clone())))
            .filter(|(a, b)| a < b)
            .collect();
        raw.sort();
        let mut parts: Vec<(Rational, Rational)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match parts.last_mut() {
                Some((_, end)) if a <= *end => {
                    if b > *end {
                        *end = b;
                    }
                }
                _ => parts.push((a, b)),
            }
        }
        IntervalUnion { parts }
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.parts.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let i = self.parts.partition_point(|(a, _)| a <= x);
        i > 0 && x < &self.parts[i - 1].1
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        IntervalUnion::from_intervals(self.parts.iter().chain(&other.parts).cloned())
    }

    pub fn intersection(&self, other: &IntervalUnion) -> IntervalUnion {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.parts.len() && j < other.parts.len() {
            let (a1, b1) = &self.parts[i];
            let (a2, b2) = &other.parts[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion::from_intervals(out)
    }

    /// Complement within `[0, 1)`.
    pub fn complement(&self) -> IntervalUnion {
        let mut out = Vec::with_capacity(self.parts.len() + 1);
        let mut cursor = Rational::zero();
        for (a, b) in &self.parts {
            out.push((cursor, a.clone()));
            cursor = b.clone();
        }
        out.push((cursor, Rational::one()));
        IntervalUnion::from_intervals(out)
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("{}");
        }
        let pieces: Vec<String> = self.parts.iter().map(|(a, b)| format!("[{a}, {b})")).collect();
        f.write_str(&pieces.join(" ∪ "))
    }
}
