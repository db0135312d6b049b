//! Shift `σ`, its iterates, generalized shifts `σ_m` and their compositions.
//!
//! On digit streams `σ_m` deletes the digit at position `m` (and, for Cantor
//! bases, the base entry `q_m`); `σ = σ_1`. By convention `σ_0` is the
//! identity. Every operator here has a digit-level form and a closed-form
//! value formula, and the two must agree exactly.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expansion::{DigitExpansion, Tail};
use crate::rational::Rational;

/// `σ`: drops the first digit and the first base entry.
pub fn shift(e: &DigitExpansion) -> DigitExpansion {
    generalized_shift(e, 1)
}

/// `σ^n`.
pub fn shift_n(e: &DigitExpansion, n: usize) -> DigitExpansion {
    (0..n).fold(e.clone(), |acc, _| shift(&acc))
}

/// `σ_m`: deletes the digit at position `m`. `m = 0` is the identity.
pub fn generalized_shift(e: &DigitExpansion, m: usize) -> DigitExpansion {
    if m == 0 {
        return e.clone();
    }
    let mut digits = e.digits().to_vec();
    if m <= digits.len() {
        digits.remove(m - 1);
    }
    // a deletion inside the tail leaves a tail of the same kind over Q \ {q_m}
    DigitExpansion::new(e.base().without_position(m), digits, e.tail())
        .expect("deleting a digit together with its base entry keeps every digit in its alphabet")
}

/// Deletes a set of original positions at once.
pub fn remove_positions(e: &DigitExpansion, positions: &BTreeSet<usize>) -> DigitExpansion {
    positions
        .iter()
        .rev()
        .fold(e.clone(), |acc, &m| generalized_shift(&acc, m))
}

/// `θ_n = Σ_{k ≤ n} i_k / (q_1 ... q_k)`.
pub fn leading_sum(e: &DigitExpansion, n: usize) -> Rational {
    let mut numer = BigInt::zero();
    let mut denom = BigInt::one();
    for k in 1..=n {
        let q = e.base().base_at(k);
        numer = numer * q + e.digit_at(k);
        denom *= q;
    }
    Rational::new(numer, denom)
}

fn base_product(e: &DigitExpansion, n: usize) -> Rational {
    Rational::from_integer(e.base().product(n))
}

/// `ϑ_{m-1}` and `ζ_{m+1}` around a deleted position `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialSums {
    /// Digits before position `m`.
    pub theta: Rational,
    /// Digits after position `m`, re-weighted as if `q_m` were absent.
    pub zeta: Rational,
}

impl PartialSums {
    /// Computed from the digit stream; `zeta` is read off the deleted stream.
    pub fn around(e: &DigitExpansion, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("position m must be at least 1".into()));
        }
        let theta = leading_sum(e, m - 1);
        let zeta = generalized_shift(e, m).value() - &theta;
        Ok(PartialSums { theta, zeta })
    }
}

/// Checks that `x` is the value of `e`.
fn expect_value(x: &Rational, value: Rational) -> Result<()> {
    if *x != value {
        return Err(Error::Inconsistent(format!(
            "x = {x} but the expansion has value {value}"
        )));
    }
    Ok(())
}

/// `σ_m(x) = q_m x - (q_m - 1) ϑ_{m-1} - i_m / (q_1 ... q_{m-1})`.
///
/// `x` must equal the value of `e`: the correction terms read digits, so the
/// expansion fixes which of two dual representations is meant.
pub fn generalized_shift_value(x: &Rational, e: &DigitExpansion, m: usize) -> Result<Rational> {
    expect_value(x, e.value())?;
    if m == 0 {
        return Ok(x.clone());
    }
    let qm = Rational::from_integer(BigInt::from(e.base().base_at(m)));
    let theta = leading_sum(e, m - 1);
    let im = Rational::from_integer(BigInt::from(e.digit_at(m)));
    Ok(&qm * x - (&qm - Rational::one()) * theta - im / base_product(e, m - 1))
}

/// `σ^n(x)` for any rational `x ∈ [0, 1]` through
/// `x = θ_n + σ^n(x) / (q_1 ... q_n)`, using the greedy (Zeros) digits.
/// `σ^n(1) = 1`.
pub fn shift_n_value(x: &Rational, base: &crate::expansion::BaseSpec, n: usize) -> Result<Rational> {
    if !crate::rational::is_unit(x) {
        return Err(Error::OutOfUnitInterval(x.to_string()));
    }
    if x.is_one() || n == 0 {
        return Ok(x.clone());
    }
    let (digits, _) = crate::expansion::greedy_digits(x, base, n);
    let prefix = DigitExpansion::new(base.clone(), digits, Tail::Zeros)?;
    Ok((x - prefix.value()) * Rational::from_integer(base.product(n)))
}

/// The original positions removed by `σ_{n_2} ∘ σ_{n_1}`.
pub fn composed_deletions(n1: usize, n2: usize) -> BTreeSet<usize> {
    match (n1, n2) {
        (0, 0) => BTreeSet::new(),
        (0, m) | (m, 0) => BTreeSet::from([m]),
        (n1, n2) if n1 > n2 => BTreeSet::from([n2, n1]),
        (n1, n2) if n1 < n2 => BTreeSet::from([n1, n2 + 1]),
        (n0, _) => BTreeSet::from([n0, n0 + 1]),
    }
}

/// `σ_{n_2} ∘ σ_{n_1}` through the three-case closed digit formula.
pub fn compose_two(e: &DigitExpansion, n1: usize, n2: usize) -> DigitExpansion {
    remove_positions(e, &composed_deletions(n1, n2))
}

/// Original positions removed by applying `σ_{m_1}`, then `σ_{m_2}`, ...
pub fn chain_deletions(indices: &[usize]) -> BTreeSet<usize> {
    let mut deleted = BTreeSet::new();
    for &m in indices {
        if m == 0 {
            continue;
        }
        deleted.insert(nth_kept(&deleted, m));
    }
    deleted
}

/// The `j`-th positive integer (1-based) not in `deleted`.
pub fn nth_kept(deleted: &BTreeSet<usize>, j: usize) -> usize {
    let mut pos = j;
    for &d in deleted {
        if d <= pos {
            pos += 1;
        } else {
            break;
        }
    }
    pos
}

/// Order in which digits are to be deleted, with the re-indexed positions
/// `n̄_i = n_i - ϱ_i` that perform those deletions one generalized shift at a
/// time (`ϱ_i` counts the earlier entries smaller than `n_i`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletionSchedule {
    positions: Vec<usize>,
    bars: Vec<usize>,
}

impl DeletionSchedule {
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn bars(&self) -> &[usize] {
        &self.bars
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub fn make_schedule(positions: &[usize]) -> Result<DeletionSchedule> {
    let mut seen = BTreeSet::new();
    let mut bars = Vec::with_capacity(positions.len());
    for &n in positions {
        if n == 0 {
            return Err(Error::InvalidArgument("deletion positions are 1-based".into()));
        }
        if !seen.insert(n) {
            return Err(Error::InvalidArgument(format!("position {n} is listed twice")));
        }
        let smaller = seen.range(..n).count();
        bars.push(n - smaller);
    }
    Ok(DeletionSchedule {
        positions: positions.to_vec(),
        bars,
    })
}

/// `σ_{n̄_k} ∘ ... ∘ σ_{n̄_1}(e)`.
pub fn delete_positions(e: &DigitExpansion, schedule: &DeletionSchedule) -> DigitExpansion {
    schedule
        .bars
        .iter()
        .fold(e.clone(), |acc, &m| generalized_shift(&acc, m))
}

/// Value of `e` read as the alternating series `Σ (-1)^k i_k / (q_1 ... q_k)`.
pub fn alternating_value(e: &DigitExpansion) -> Rational {
    let depth = e.settled_len();
    let mut sum = Rational::zero();
    let mut denom = BigInt::one();
    for k in 1..=depth {
        denom *= e.base().base_at(k);
        let term = Rational::new(BigInt::from(e.digit_at(k)), denom.clone());
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if e.tail() == Tail::MaxDigits {
        // Σ_{k>L} (-1)^k (t-1) / (P_L t^{k-L}) = (-1)^{L+1} (t-1) / (P_L (t+1))
        let t = BigInt::from(e.base().tail_value());
        let tail = Rational::new(&t - 1, denom * (&t + 1));
        if depth.is_multiple_of(2) {
            sum -= tail;
        } else {
            sum += tail;
        }
    }
    sum
}

/// `σ_m` on the alternating series:
/// `-q_m x + (1 + q_m) Σ_{k<m} (-1)^k i_k / (q_1...q_k) + (-1)^m i_m / (q_1...q_{m-1})`.
pub fn alternating_generalized_shift_value(x: &Rational, e: &DigitExpansion, m: usize) -> Result<Rational> {
    expect_value(x, alternating_value(e))?;
    if m == 0 {
        return Ok(x.clone());
    }
    let qm = Rational::from_integer(BigInt::from(e.base().base_at(m)));
    let mut head = Rational::zero();
    let mut denom = BigInt::one();
    for k in 1..m {
        denom *= e.base().base_at(k);
        let term = Rational::new(BigInt::from(e.digit_at(k)), denom.clone());
        if k % 2 == 0 {
            head += term;
        } else {
            head -= term;
        }
    }
    let mut last = Rational::new(BigInt::from(e.digit_at(m)), denom);
    if m % 2 == 1 {
        last = -last;
    }
    Ok(-(&qm * x) + (Rational::one() + &qm) * head + last)
}
