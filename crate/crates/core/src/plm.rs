//! Piecewise-linear maps on `[0, 1)` with exact rational branches.
//!
//! `σ^n` and `σ_m` are affine on every cylinder of rank `n` (resp. `m`), so
//! their compositions are finite lists of affine branches and the measure of
//! a sublevel set is a finite exact sum.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interval::IntervalUnion;
use crate::rational::{self, Rational};

pub const DEFAULT_BRANCH_BUDGET: usize = 1_000_000;

/// `z ↦ slope·z + intercept` on `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub lo: Rational,
    pub hi: Rational,
    pub slope: Rational,
    pub intercept: Rational,
}

impl Branch {
    pub fn eval(&self, z: &Rational) -> Rational {
        &self.slope * z + &self.intercept
    }

    /// Length of `{z ∈ [lo, hi) : slope·z + intercept < x}`.
    fn sublevel_length(&self, x: &Rational) -> Rational {
        sublevel_piece(&self.lo, &self.hi, &self.slope, &(&self.intercept - x))
            .map(|(a, b)| b - a)
            .unwrap_or_else(Rational::zero)
    }
}

/// `{z ∈ [lo, hi) : s·z + c < 0}` as a single interval, if non-empty.
fn sublevel_piece(lo: &Rational, hi: &Rational, s: &Rational, c: &Rational) -> Option<(Rational, Rational)> {
    let (a, b) = if s.is_zero() {
        if c.is_negative() {
            (lo.clone(), hi.clone())
        } else {
            return None;
        }
    } else {
        let root = -c / s;
        if s.is_positive() {
            (lo.clone(), root.min(hi.clone()))
        } else {
            (root.max(lo.clone()), hi.clone())
        }
    };
    (a < b).then_some((a, b))
}

/// A map given by affine branches whose domains partition `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseLinearMap {
    branches: Vec<Branch>,
}

fn check_budget(needed: &BigInt, budget: usize) -> Result<usize> {
    match needed.to_usize() {
        Some(n) if n <= budget => Ok(n),
        _ => Err(Error::BudgetExceeded {
            needed: needed.to_string(),
            budget,
        }),
    }
}

fn check_q(q: u32) -> Result<()> {
    if q < 2 {
        return Err(Error::InvalidBase(format!("q = {q} must be at least 2")));
    }
    Ok(())
}

impl PiecewiseLinearMap {
    pub fn from_branches(branches: Vec<Branch>) -> Result<Self> {
        let first = branches.first().ok_or_else(|| Error::InvalidArgument("no branches".into()))?;
        if !first.lo.is_zero() || !branches.last().is_some_and(|b| b.hi.is_one()) {
            return Err(Error::InvalidArgument("branches must cover [0, 1)".into()));
        }
        for w in branches.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(Error::InvalidArgument(format!("gap or overlap at {}", w[0].hi)));
            }
        }
        if let Some(b) = branches.iter().find(|b| b.lo >= b.hi) {
            return Err(Error::InvalidArgument(format!("empty branch [{}, {})", b.lo, b.hi)));
        }
        Ok(PiecewiseLinearMap { branches })
    }

    fn single(slope: Rational, intercept: Rational) -> Self {
        PiecewiseLinearMap {
            branches: vec![Branch {
                lo: Rational::zero(),
                hi: Rational::one(),
                slope,
                intercept,
            }],
        }
    }

    pub fn identity() -> Self {
        Self::single(Rational::one(), Rational::zero())
    }

    pub fn constant(c: Rational) -> Self {
        Self::single(Rational::zero(), c)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    fn branch_index(&self, z: &Rational) -> usize {
        self.branches.partition_point(|b| &b.lo <= z).saturating_sub(1)
    }

    pub fn branch_at(&self, z: &Rational) -> Result<&Branch> {
        if z.is_negative() || z >= &Rational::one() {
            return Err(Error::OutOfUnitInterval(z.to_string()));
        }
        Ok(&self.branches[self.branch_index(z)])
    }

    pub fn apply(&self, z: &Rational) -> Result<Rational> {
        Ok(self.branch_at(z)?.eval(z))
    }

    /// `σ^n`: on the cylinder with index `i` the map is `q^n z - i`.
    pub fn iter_shift(q: u32, n: usize, budget: usize) -> Result<Self> {
        check_q(q)?;
        let count = check_budget(&rational::pow(q, n), budget)?;
        let scale = Rational::from_integer(rational::pow(q, n));
        let branches = (0..count)
            .map(|i| Branch {
                lo: Rational::new(BigInt::from(i), scale.to_integer()),
                hi: Rational::new(BigInt::from(i + 1), scale.to_integer()),
                slope: scale.clone(),
                intercept: Rational::from_integer(-BigInt::from(i)),
            })
            .collect();
        Ok(PiecewiseLinearMap { branches })
    }

    /// `σ_m` for the constant base `q`; `m = 0` is the identity. On the
    /// rank-`m` cylinder with digits `c_1 … c_m` the map is
    /// `q z - c_m / q^{m-1} - (q-1) Σ_{j<m} c_j q^{-j}`.
    pub fn generalized_shift(q: u32, m: usize, budget: usize) -> Result<Self> {
        check_q(q)?;
        if m == 0 {
            return Ok(Self::identity());
        }
        let count = check_budget(&rational::pow(q, m), budget)?;
        let den = rational::pow(q, m);
        let prefix_den = rational::pow(q, m - 1);
        let q_big = BigInt::from(q);
        let branches = (0..count)
            .map(|i| {
                let i = BigInt::from(i);
                let last = &i % &q_big;
                let prefix = &i / &q_big;
                Branch {
                    lo: Rational::new(i.clone(), den.clone()),
                    hi: Rational::new(i + 1, den.clone()),
                    slope: Rational::from_integer(q_big.clone()),
                    intercept: -Rational::new(last + (&q_big - 1) * prefix, prefix_den.clone()),
                }
            })
            .collect();
        Ok(PiecewiseLinearMap { branches })
    }

    /// `σ_{m_k} ∘ … ∘ σ_{m_1}` built by successive composition, `m_1` applied
    /// first. The result is affine on cylinders whose rank is the largest
    /// original position deleted, and that branch count is checked up front.
    pub fn chain(q: u32, indices: &[usize], budget: usize) -> Result<Self> {
        check_q(q)?;
        let deleted = crate::shift::chain_deletions(indices);
        let rank = deleted.iter().next_back().copied().unwrap_or(0);
        check_budget(&rational::pow(q, rank), budget)?;
        let mut map = Self::identity();
        for &m in indices.iter().filter(|&&m| m > 0) {
            map = Self::generalized_shift(q, m, budget)?.compose(&map, budget)?;
        }
        Ok(map)
    }

    /// `self ∘ inner`. Each inner branch is split where its image crosses a
    /// breakpoint of `self`.
    pub fn compose(&self, inner: &PiecewiseLinearMap, budget: usize) -> Result<Self> {
        let mut out: Vec<Branch> = Vec::new();
        let push = |out: &mut Vec<Branch>, b: Branch| -> Result<()> {
            if out.len() >= budget {
                return Err(Error::BudgetExceeded {
                    needed: format!("more than {budget}"),
                    budget,
                });
            }
            out.push(b);
            Ok(())
        };
        for br in &inner.branches {
            let mut cuts = vec![br.lo.clone()];
            if !br.slope.is_zero() {
                let (y0, y1) = (br.eval(&br.lo), br.eval(&br.hi));
                let (ylo, yhi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
                let start = self.branches.partition_point(|b| b.lo <= ylo);
                let mut inner_cuts: Vec<Rational> = self.branches[start..]
                    .iter()
                    .take_while(|b| b.lo < yhi)
                    .map(|b| (&b.lo - &br.intercept) / &br.slope)
                    .collect();
                inner_cuts.sort();
                cuts.extend(inner_cuts);
            }
            cuts.push(br.hi.clone());
            for w in cuts.windows(2) {
                let mid = (&w[0] + &w[1]) / Rational::from_integer(BigInt::from(2));
                let y = br.eval(&mid);
                let outer = self
                    .branch_at(&y)
                    .map_err(|_| Error::Inconsistent(format!("inner image {y} leaves [0, 1)")))?;
                push(
                    &mut out,
                    Branch {
                        lo: w[0].clone(),
                        hi: w[1].clone(),
                        slope: &outer.slope * &br.slope,
                        intercept: &outer.slope * &br.intercept + &outer.intercept,
                    },
                )?;
            }
        }
        Ok(PiecewiseLinearMap { branches: out })
    }

    /// Merges neighbouring branches that carry the same affine formula.
    pub fn simplified(&self) -> Self {
        let mut out: Vec<Branch> = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            match out.last_mut() {
                Some(prev) if prev.slope == b.slope && prev.intercept == b.intercept => prev.hi = b.hi.clone(),
                _ => out.push(b.clone()),
            }
        }
        PiecewiseLinearMap { branches: out }
    }
}

/// `{z : map(z) < x}`.
pub fn sublevel_set(map: &PiecewiseLinearMap, x: &Rational) -> IntervalUnion {
    IntervalUnion::from_intervals(
        map.branches
            .iter()
            .filter_map(|b| sublevel_piece(&b.lo, &b.hi, &b.slope, &(&b.intercept - x))),
    )
}

/// `λ{z : map(z) < x}`, summed branch by branch.
pub fn sublevel_measure(map: &PiecewiseLinearMap, x: &Rational) -> Rational {
    map.branches
        .par_iter()
        .map(|b| b.sublevel_length(x))
        .reduce(Rational::zero, |a, b| a + b)
}

/// Cells of the common refinement of two branch partitions, as index pairs.
fn refinement(a: &PiecewiseLinearMap, b: &PiecewiseLinearMap) -> Vec<(Rational, Rational, usize, usize)> {
    let (mut i, mut j) = (0, 0);
    let mut lo = Rational::zero();
    let mut cells = Vec::with_capacity(a.len().max(b.len()));
    while i < a.len() && j < b.len() {
        let hi = (&a.branches[i].hi).min(&b.branches[j].hi).clone();
        cells.push((lo, hi.clone(), i, j));
        if a.branches[i].hi == hi {
            i += 1;
        }
        if b.branches[j].hi == hi {
            j += 1;
        }
        lo = hi;
    }
    cells
}

/// `{z : a(z) < b(z)}`.
pub fn comparison_set(a: &PiecewiseLinearMap, b: &PiecewiseLinearMap) -> IntervalUnion {
    IntervalUnion::from_intervals(refinement(a, b).into_iter().filter_map(|(lo, hi, i, j)| {
        let (ba, bb) = (&a.branches[i], &b.branches[j]);
        sublevel_piece(&lo, &hi, &(&ba.slope - &bb.slope), &(&ba.intercept - &bb.intercept))
    }))
}

/// `λ{z : a(z) < b(z)}` over the common refinement of the two partitions.
pub fn comparison_measure(a: &PiecewiseLinearMap, b: &PiecewiseLinearMap) -> Rational {
    refinement(a, b)
        .into_par_iter()
        .map(|(lo, hi, i, j)| {
            let (ba, bb) = (&a.branches[i], &b.branches[j]);
            sublevel_piece(&lo, &hi, &(&ba.slope - &bb.slope), &(&ba.intercept - &bb.intercept))
                .map(|(s, e)| e - s)
                .unwrap_or_else(Rational::zero)
        })
        .reduce(Rational::zero, |x, y| x + y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{BaseSpec, DigitExpansion, Tail};
    use crate::rational::{int, ratio};
    use crate::shift::{generalized_shift, make_schedule, delete_positions, shift_n};
    use proptest::prelude::*;

    const B: usize = DEFAULT_BRANCH_BUDGET;

    fn expansion(q: u32, digits: Vec<u32>) -> DigitExpansion {
        DigitExpansion::new(BaseSpec::Constant(q), digits, Tail::Zeros).unwrap()
    }

    #[test]
    fn doubling_map() {
        let m = PiecewiseLinearMap::iter_shift(2, 1, B).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.branches()[1].lo, ratio(1, 2));
        assert_eq!(m.branches()[1].slope, int(2));
        assert_eq!(m.branches()[1].intercept, int(-1));
        assert_eq!(m.apply(&ratio(3, 4)).unwrap(), ratio(1, 2));
        let t = PiecewiseLinearMap::iter_shift(10, 1, B).unwrap();
        assert_eq!(t.apply(&ratio(1234, 10000)).unwrap(), ratio(234, 1000));
        let e = PiecewiseLinearMap::iter_shift(2, 3, B).unwrap();
        assert_eq!(e.len(), 8);
        assert!(e.branches().iter().all(|b| b.slope == int(8)));
        assert!(e.apply(&int(1)).is_err());
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(
            PiecewiseLinearMap::iter_shift(10, 7, B),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(PiecewiseLinearMap::chain(2, &[30], B).is_err());
        assert!(PiecewiseLinearMap::iter_shift(1, 2, B).is_err());
    }

    #[test]
    fn empty_chain_is_identity() {
        assert_eq!(PiecewiseLinearMap::chain(3, &[], B).unwrap(), PiecewiseLinearMap::identity());
        assert_eq!(PiecewiseLinearMap::generalized_shift(3, 0, B).unwrap(), PiecewiseLinearMap::identity());
    }

    #[test]
    fn sublevel_examples() {
        let id = PiecewiseLinearMap::identity();
        assert_eq!(sublevel_measure(&id, &ratio(1, 3)), ratio(1, 3));
        for n in 1..=6 {
            let m = PiecewiseLinearMap::iter_shift(2, n, B).unwrap();
            assert_eq!(sublevel_measure(&m, &ratio(1, 3)), ratio(1, 3));
            assert_eq!(sublevel_measure(&m, &int(0)), int(0));
            assert_eq!(sublevel_measure(&m, &int(1)), int(1));
        }
        for m in 1..=4 {
            let g = PiecewiseLinearMap::generalized_shift(10, m, B).unwrap();
            assert_eq!(sublevel_measure(&g, &ratio(1, 4)), ratio(1, 4));
        }
        let set = sublevel_set(&PiecewiseLinearMap::iter_shift(2, 1, B).unwrap(), &ratio(1, 2));
        assert_eq!(set.intervals(), &[(int(0), ratio(1, 4)), (ratio(1, 2), ratio(3, 4))]);
    }

    #[test]
    fn comparison_examples() {
        let id = PiecewiseLinearMap::identity();
        let s = PiecewiseLinearMap::iter_shift(2, 2, B).unwrap();
        assert_eq!(comparison_measure(&s, &s), int(0));
        assert_eq!(comparison_measure(&id, &PiecewiseLinearMap::constant(ratio(1, 2))), ratio(1, 2));
        // σ^2(z) < σ(z): with u = σ^2 z and digit d_2, σz = (d_2 + u)/2, so
        // the condition is u < d_2; holds on the half where d_2 = 1 except a
        // null set
        let s1 = PiecewiseLinearMap::iter_shift(2, 1, B).unwrap();
        assert_eq!(comparison_measure(&s, &s1), ratio(1, 2));
        assert_eq!(
            comparison_set(&s, &s1).measure(),
            comparison_measure(&s, &s1)
        );
    }

    #[test]
    fn composition_of_shifts() {
        let s1 = PiecewiseLinearMap::iter_shift(3, 1, B).unwrap();
        let s2 = s1.compose(&s1, B).unwrap();
        assert_eq!(s2, PiecewiseLinearMap::iter_shift(3, 2, B).unwrap());
        let g1 = PiecewiseLinearMap::generalized_shift(3, 1, B).unwrap();
        assert_eq!(g1, s1);
        let c = PiecewiseLinearMap::chain(2, &[2, 2, 2], B).unwrap();
        assert!(c.branches().iter().all(|b| b.slope == int(8)));
    }

    #[test]
    fn chain_from_schedule_matches_deletion() {
        let positions = [1, 5, 7, 3, 6];
        let schedule = make_schedule(&positions).unwrap();
        let map = PiecewiseLinearMap::chain(2, schedule.bars(), B).unwrap();
        let mut state = 0x2545F4914F6CDD1Du64;
        for _ in 0..100 {
            let len = (state % 13) as usize + 1;
            let digits: Vec<u32> = (0..len)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state % 2) as u32
                })
                .collect();
            let e = expansion(2, digits);
            let z = e.value();
            if z >= int(1) {
                continue;
            }
            assert_eq!(map.apply(&z).unwrap(), delete_positions(&e, &schedule).value());
        }
    }

    proptest! {
        #[test]
        fn iter_shift_agrees_with_digits(q in 2u32..=5, n in 1usize..=4, raw in proptest::collection::vec(0u32..5, 0..10)) {
            let e = expansion(q, raw.iter().map(|d| d % q).collect());
            let map = PiecewiseLinearMap::iter_shift(q, n, B).unwrap();
            prop_assert_eq!(map.apply(&e.value()).unwrap(), shift_n(&e, n).value());
        }

        #[test]
        fn generalized_shift_agrees_with_digits(q in 2u32..=4, m in 1usize..=5, raw in proptest::collection::vec(0u32..4, 0..10)) {
            let e = expansion(q, raw.iter().map(|d| d % q).collect());
            let map = PiecewiseLinearMap::generalized_shift(q, m, B).unwrap();
            prop_assert_eq!(map.apply(&e.value()).unwrap(), generalized_shift(&e, m).value());
        }

        #[test]
        fn chains_agree_with_digits(
            q in 2u32..=3,
            chain in proptest::collection::vec(1usize..=4, 0..4),
            raw in proptest::collection::vec(0u32..3, 0..10),
        ) {
            let e = expansion(q, raw.iter().map(|d| d % q).collect());
            let map = PiecewiseLinearMap::chain(q, &chain, B).unwrap();
            let direct = chain.iter().fold(e.clone(), |acc, &m| generalized_shift(&acc, m));
            prop_assert_eq!(map.apply(&e.value()).unwrap(), direct.value());
            prop_assert!(map.branches().iter().all(|b| b.slope == Rational::from_integer(rational::pow(q, chain.len()))));
        }

        #[test]
        fn sublevel_is_monotone_and_measure_preserving(q in 2u32..=3, n in 1usize..=4, a in 0i64..=30, b in 0i64..=30) {
            let map = PiecewiseLinearMap::iter_shift(q, n, B).unwrap();
            let (x1, x2) = (ratio(a.min(b), 30), ratio(a.max(b), 30));
            let (m1, m2) = (sublevel_measure(&map, &x1), sublevel_measure(&map, &x2));
            prop_assert!(m1 <= m2);
            prop_assert_eq!(m1.clone(), x1.clone());
            prop_assert_eq!(sublevel_set(&map, &x1).measure(), m1);
        }
    }
}
