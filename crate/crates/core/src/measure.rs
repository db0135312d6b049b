//! Exact measures for maps that delete a finite set of digit positions.
//!
//! Every composition of `σ` and `σ_m` on a constant base deletes a finite
//! set `D` of original positions. With `R = max D` and `L = R - |D|`, on the
//! rank-`R` cylinder with digits `c_1 … c_R` the map reads
//! `z ↦ (K + u) / q^L`, where `K` collects the kept digits among
//! `c_1 … c_R` and `u ∈ [0, 1)` is the position of `z` inside the cylinder.
//! Measures are then sums of integer fractions over the `q^R` cells, which
//! keeps budgets of a million branches cheap.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plm::{Branch, PiecewiseLinearMap};
use crate::rational::{self, Rational};
use crate::shift::chain_deletions;

const CELL_CHUNK: u64 = 1 << 14;

/// A shift composition on base `q`, recorded by the original positions it
/// deletes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeletionMap {
    q: u32,
    deleted: BTreeSet<usize>,
}

impl DeletionMap {
    pub fn new(q: u32, deleted: BTreeSet<usize>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidBase(format!("q = {q} must be at least 2")));
        }
        if deleted.contains(&0) {
            return Err(Error::InvalidArgument("positions are 1-based".into()));
        }
        Ok(DeletionMap { q, deleted })
    }

    pub fn identity(q: u32) -> Result<Self> {
        Self::new(q, BTreeSet::new())
    }

    /// `σ^n`.
    pub fn iter_shift(q: u32, n: usize) -> Result<Self> {
        Self::new(q, (1..=n).collect())
    }

    /// `σ_{m_k} ∘ … ∘ σ_{m_1}`, `m_1` applied first; zeros are identities.
    pub fn chain(q: u32, indices: &[usize]) -> Result<Self> {
        Self::new(q, chain_deletions(indices))
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn deleted(&self) -> &BTreeSet<usize> {
        &self.deleted
    }

    /// Rank of the cylinders on which the map is affine.
    pub fn rank(&self) -> usize {
        self.deleted.iter().next_back().copied().unwrap_or(0)
    }

    /// Slope `q^{|D|}`.
    pub fn slope(&self) -> BigInt {
        rational::pow(self.q, self.deleted.len())
    }

    /// Kept positions up to `rank`, in order.
    fn kept_until(&self, rank: usize) -> Vec<usize> {
        (1..=rank).filter(|p| !self.deleted.contains(p)).collect()
    }

    /// Position in `z` of the `j`-th digit of the image, `j ≥ 1`.
    pub fn source_positions(&self, count: usize) -> Vec<usize> {
        (1..)
            .filter(|p| !self.deleted.contains(p))
            .take(count)
            .collect()
    }

    /// Branch list over the rank-`R` cylinders.
    pub fn to_plm(&self, budget: usize) -> Result<PiecewiseLinearMap> {
        let r = self.rank();
        let cells = cell_count(self.q, r, budget)?;
        let kept = self.kept_until(r);
        let den = rational::pow(self.q, r);
        let image_den = rational::pow(self.q, kept.len());
        let slope = Rational::from_integer(self.slope());
        let branches = (0..cells)
            .map(|i| {
                let k = kept_value(self.q, r, &kept, i);
                let lo = Rational::new(BigInt::from(i), den.clone());
                let intercept = Rational::new(BigInt::from(k), image_den.clone()) - &slope * &lo;
                Branch {
                    hi: Rational::new(BigInt::from(i + 1), den.clone()),
                    lo,
                    slope: slope.clone(),
                    intercept,
                }
            })
            .collect();
        PiecewiseLinearMap::from_branches(branches)
    }

    /// Image of a terminating point under the digit-level map.
    pub fn apply(&self, z: &Rational) -> Result<Rational> {
        self.to_plm(usize::MAX)?.apply(z)
    }
}

fn cell_count(q: u32, rank: usize, budget: usize) -> Result<u64> {
    let needed = rational::pow(q, rank);
    match needed.to_u64() {
        Some(n) if n <= budget as u64 => Ok(n),
        _ => Err(Error::BudgetExceeded {
            needed: needed.to_string(),
            budget,
        }),
    }
}

/// Branches needed to evaluate a measure of `maps` exactly.
pub fn required_cells(maps: &[&DeletionMap]) -> BigInt {
    let rank = maps.iter().map(|m| m.rank()).max().unwrap_or(0);
    let q = maps.first().map(|m| m.q).unwrap_or(2);
    rational::pow(q, rank)
}

/// Kept digits of cell `i` (rank `r`) read as a base-`q` integer.
fn kept_value(q: u32, r: usize, kept: &[usize], i: u64) -> u64 {
    let q = q as u64;
    let mut digits = vec![0u64; r + 1];
    let mut rest = i;
    for p in (1..=r).rev() {
        digits[p] = rest % q;
        rest /= q;
    }
    kept.iter().fold(0, |acc, &p| acc * q + digits[p])
}

fn chunked_sum<F>(cells: u64, f: F) -> BigInt
where
    F: Fn(u64) -> BigInt + Sync,
{
    let chunks = cells.div_ceil(CELL_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CELL_CHUNK).min(cells);
            (c * CELL_CHUNK..end).fold(BigInt::zero(), |acc, i| acc + f(i))
        })
        .reduce(BigInt::zero, |a, b| a + b)
}

/// `λ{z : map(z) < x}` by exact summation over the rank-`R` cells.
pub fn exact_sublevel(map: &DeletionMap, x: &Rational, budget: usize) -> Result<Rational> {
    let r = map.rank();
    let cells = cell_count(map.q, r, budget)?;
    let kept = map.kept_until(r);
    // cell i contributes clamp(x q^L - K_i, 0, 1) / q^R; with x = a/b the
    // numerator over b is clamp(a q^L - b K_i, 0, b)
    let (a, b) = (x.numer().clone(), x.denom().clone());
    let scaled = &a * rational::pow(map.q, kept.len());
    let total = chunked_sum(cells, |i| {
        let k = BigInt::from(kept_value(map.q, r, &kept, i));
        let n = &scaled - &b * k;
        n.clamp(BigInt::zero(), b.clone())
    });
    Ok(Rational::new(total, b * rational::pow(map.q, r)))
}

/// `λ{z : a(z) < b(z)}` by exact summation over the common refinement.
pub fn exact_comparison(a: &DeletionMap, b: &DeletionMap, budget: usize) -> Result<Rational> {
    if a.q != b.q {
        return Err(Error::Inconsistent(format!("bases {} and {} differ", a.q, b.q)));
    }
    let q = a.q;
    let r = a.rank().max(b.rank());
    let cells = cell_count(q, r, budget)?;
    let (kept_a, kept_b) = (a.kept_until(r), b.kept_until(r));
    let (sa, sb) = (a.slope(), b.slope());
    // on a cell: a < b  ⇔  u (s_a - s_b) < K_b s_b - K_a s_a,  u ∈ [0, 1)
    let s = &sa - &sb;
    let den = s.abs().max(BigInt::from(1));
    let total = chunked_sum(cells, |i| {
        let ka = BigInt::from(kept_value(q, r, &kept_a, i));
        let kb = BigInt::from(kept_value(q, r, &kept_b, i));
        let c = kb * &sb - ka * &sa;
        if s.is_zero() {
            if c.is_positive() {
                den.clone()
            } else {
                BigInt::zero()
            }
        } else if s.is_positive() {
            c.clamp(BigInt::zero(), den.clone())
        } else {
            &den - (-c).clamp(BigInt::zero(), den.clone())
        }
    });
    Ok(Rational::new(total, den * rational::pow(q, r)))
}

/// Threshold `σ^{k_0}(x)` for sets measured against a shifted point.
pub fn shifted_threshold(x: &Rational, q: u32, k0: usize) -> Result<Rational> {
    crate::shift::shift_n_value(x, &crate::expansion::BaseSpec::constant(q)?, k0)
}

/// Reduced fraction parts, for table output.
pub fn fraction_parts(x: &Rational) -> (BigInt, BigInt) {
    let g = x.numer().gcd(x.denom());
    (x.numer() / &g, x.denom() / &g)
}
