//! Generalized Salem functions.
//!
//! For a weight tuple `P_q = (p_0, ..., p_{q-1})` with cumulative sums
//! `β_i = p_0 + ... + p_{i-1}` and an index sequence `(n_k)`, the function
//!
//! ```text
//! g(x) = β_{α_{n_1}} + Σ_{k≥2} β_{α_{n_k}} Π_{j<k} p_{α_{n_j}},   x = Δ^q_{α_1 α_2 ...}
//! ```
//!
//! is the bounded solution of the system
//! `f(σ_{n̄_{k-1}} ∘ ... ∘ σ_{n̄_1}(x)) = β_{α_{n_k}} + p_{α_{n_k}} f(σ_{n̄_k} ∘ ... ∘ σ_{n̄_1}(x))`.
//! At level `k` the unknown reads the surviving digits in the order the
//! remaining indices `n_{k+1}, n_{k+2}, ...` prescribe, re-indexed to their
//! positions in the shortened stream; [`IndexSequence::after`] builds that
//! order and [`SalemFunction::level`] the corresponding function.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expansion::{dual_representation, greedy_digits, BaseSpec, Cylinder, DigitExpansion, Tail};
use crate::rational::{self, parse_rational, Rational};
use crate::shift::{delete_positions, make_schedule, DeletionSchedule};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// `P_q` together with the derived `β_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    p: Vec<Rational>,
    beta: Vec<Rational>,
    p_f64: Vec<f64>,
    beta_f64: Vec<f64>,
}

impl WeightSet {
    /// Weights admissible for the functional-equation system: every
    /// `p_i ∈ (-1, 1)`, `Σ p_i = 1` and `0 < β_i < 1` for `i ≠ 0`.
    pub fn new(p: Vec<Rational>) -> Result<Self> {
        let w = Self::checked_sum(p)?;
        if let Some((i, pi)) = w.p.iter().enumerate().find(|(_, pi)| pi.abs() >= Rational::one()) {
            return Err(Error::InvalidWeights(format!("p_{i} = {pi} is outside (-1, 1)")));
        }
        for (i, b) in w.beta.iter().enumerate().skip(1) {
            if !b.is_positive() || b >= &Rational::one() {
                return Err(Error::InvalidWeights(format!("beta_{i} = {b} is outside (0, 1)")));
            }
        }
        Ok(w)
    }

    /// Digit probabilities: `0 ≤ p_i < 1`, `Σ p_i = 1`. Zero weights are
    /// allowed here even where they push some `β_i` onto 0 or 1.
    pub fn probabilities(p: Vec<Rational>) -> Result<Self> {
        let w = Self::checked_sum(p)?;
        if let Some((i, pi)) = w
            .p
            .iter()
            .enumerate()
            .find(|(_, pi)| pi.is_negative() || *pi >= &Rational::one())
        {
            return Err(Error::InvalidWeights(format!("p_{i} = {pi} is outside [0, 1)")));
        }
        Ok(w)
    }

    pub fn uniform(q: u32) -> Result<Self> {
        Self::new(vec![Rational::new(BigInt::one(), BigInt::from(q)); q as usize])
    }

    fn checked_sum(p: Vec<Rational>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::InvalidWeights(format!("need at least 2 weights, got {}", p.len())));
        }
        let total: Rational = p.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        let mut beta = Vec::with_capacity(p.len());
        let mut acc = Rational::zero();
        for pi in &p {
            beta.push(acc.clone());
            acc += pi;
        }
        Ok(WeightSet {
            p_f64: p.iter().map(rational::to_f64).collect(),
            beta_f64: beta.iter().map(rational::to_f64).collect(),
            p,
            beta,
        })
    }

    pub fn q(&self) -> u32 {
        self.p.len() as u32
    }

    pub fn p(&self) -> &[Rational] {
        &self.p
    }

    pub fn beta(&self) -> &[Rational] {
        &self.beta
    }

    pub fn max_abs(&self) -> f64 {
        self.p_f64.iter().fold(0.0, |m, p| m.max(p.abs()))
    }
}

/// `(n_k)` as a finite rearrangement: a permutation of `{1, ..., N}`
/// followed by `n_k = k`. Trailing fixed points of the permutation are
/// folded into the identity tail.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IndexSequence {
    prefix: Vec<usize>,
}

impl IndexSequence {
    pub fn identity() -> Self {
        IndexSequence::default()
    }

    pub fn permutation(prefix: Vec<usize>) -> Result<Self> {
        let n = prefix.len();
        let mut seen = vec![false; n + 1];
        for &v in &prefix {
            if v == 0 || v > n {
                return Err(Error::InvalidSequence(format!(
                    "{v} is not in 1..={n}; the prefix must permute 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidSequence(format!("{v} appears twice")));
            }
        }
        let mut prefix = prefix;
        while prefix.last() == Some(&prefix.len()) {
            prefix.pop();
        }
        Ok(IndexSequence { prefix })
    }

    /// `n_k` for 1-based `k`.
    pub fn n_at(&self, k: usize) -> usize {
        self.prefix.get(k - 1).copied().unwrap_or(k)
    }

    /// `N`: beyond this index `n_k = k`.
    pub fn support(&self) -> usize {
        self.prefix.len()
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn is_identity(&self) -> bool {
        self.prefix.is_empty()
    }

    /// Deletion schedule for the first `k` indices.
    pub fn schedule(&self, k: usize) -> DeletionSchedule {
        let first: Vec<usize> = (1..=k).map(|i| self.n_at(i)).collect();
        make_schedule(&first).expect("index sequences are injective")
    }

    /// Order in which the level-`k` unknown reads the digits that survive
    /// deleting positions `n_1, ..., n_k`.
    pub fn after(&self, k: usize) -> IndexSequence {
        if k >= self.prefix.len() {
            return IndexSequence::identity();
        }
        let deleted: BTreeSet<usize> = self.prefix[..k].iter().copied().collect();
        let prefix = self.prefix[k..]
            .iter()
            .map(|&n| n - deleted.range(..n).count())
            .collect();
        IndexSequence::permutation(prefix).expect("re-indexed tail of a rearrangement is a rearrangement")
    }

    /// Continuity condition at a q-rational point whose last nonzero digit
    /// sits at position `m`: with `k_0 = max{k : n_k ≤ m}`, require
    /// `n_{k_0} = m` and `n_1, ..., n_{k_0 - 1} ≤ m - 1`.
    pub fn continuity_predicate(&self, m: usize) -> bool {
        let horizon = self.support().max(m);
        // bijectivity guarantees m ∈ {n_1, ..., n_horizon}, so k_0 exists
        let Some(k0) = (1..=horizon).rev().find(|&k| self.n_at(k) <= m) else {
            return false;
        };
        self.n_at(k0) == m && (1..k0).all(|k| self.n_at(k) < m)
    }
}

impl fmt::Display for IndexSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.prefix.is_empty() {
            return f.write_str("identity");
        }
        let items: Vec<String> = self.prefix.iter().map(usize::to_string).collect();
        write!(f, "perm({})", items.join(" "))
    }
}

impl FromStr for IndexSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if matches!(s, "identity" | "id" | "") {
            return Ok(IndexSequence::identity());
        }
        let inner = s
            .strip_prefix("perm(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("expected perm(...) or identity, got {s:?}")))?;
        let prefix = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad index {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        IndexSequence::permutation(prefix)
    }
}

/// Outcome of a truncated series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Number of series terms summed explicitly.
    pub depth: usize,
    /// The tail was summed in closed form, so only rounding error remains.
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Monotonicity {
    StrictlyIncreasing,
    NonDecreasing,
    ConstantAE,
    NoMonotonicityIntervals,
    HasSomeMonotonicityInterval,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Continuity {
    Continuous,
    /// `g(zeros form) - g(max-digit form)`.
    Jump(Rational),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SalemFunction {
    weights: WeightSet,
    seq: IndexSequence,
}

impl SalemFunction {
    pub fn new(weights: WeightSet, seq: IndexSequence) -> Self {
        SalemFunction { weights, seq }
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    pub fn sequence(&self) -> &IndexSequence {
        &self.seq
    }

    pub fn q(&self) -> u32 {
        self.weights.q()
    }

    pub fn base(&self) -> BaseSpec {
        BaseSpec::Constant(self.q())
    }

    /// Smallest `K` with `M^K / (1 - M) < tol`, `M = max |p_i|`.
    pub fn truncation_depth(&self, tol: f64) -> Result<usize> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidTolerance(tol));
        }
        let m = self.weights.max_abs();
        if m >= 1.0 {
            return Err(Error::InvalidWeights(format!("max |p_i| = {m} is not below 1")));
        }
        let mut bound = 1.0 / (1.0 - m);
        let mut k = 0;
        while bound >= tol {
            bound *= m;
            k += 1;
        }
        Ok(k)
    }

    fn check_base(&self, e: &DigitExpansion) -> Result<()> {
        match e.base().constant_base() {
            Some(q) if q == self.q() => Ok(()),
            _ => Err(Error::Inconsistent(format!(
                "expansion base {} does not match q = {}",
                e.base(),
                self.q()
            ))),
        }
    }

    /// Beyond this many terms every digit read comes from the tail.
    fn settled_terms(&self, e: &DigitExpansion) -> usize {
        self.seq.support().max(e.settled_len())
    }

    fn term_digit(&self, e: &DigitExpansion, k: usize) -> usize {
        e.digit_at(self.seq.n_at(k)) as usize
    }

    fn partial_f64(&self, e: &DigitExpansion, terms: usize) -> (f64, f64) {
        let (p, beta) = (&self.weights.p_f64, &self.weights.beta_f64);
        let mut sum = 0.0;
        let mut prod = 1.0;
        for k in 1..=terms {
            let d = self.term_digit(e, k);
            sum += beta[d] * prod;
            prod *= p[d];
        }
        (sum, prod)
    }

    /// `g(e)` summed to the depth `tol` requires. When every digit beyond
    /// the explicit ones is a tail digit the rest of the series is summed in
    /// closed form: zeros contribute nothing (`β_0 = 0`) and a max-digit tail
    /// contributes `Π · β_{q-1} / (1 - p_{q-1}) = Π`.
    pub fn evaluate(&self, e: &DigitExpansion, tol: f64) -> Result<Evaluation> {
        self.check_base(e)?;
        let k = self.truncation_depth(tol)?;
        let settled = self.settled_terms(e);
        if settled <= k {
            let (sum, prod) = self.partial_f64(e, settled);
            let value = match e.tail() {
                Tail::Zeros => sum,
                Tail::MaxDigits => sum + prod,
            };
            Ok(Evaluation {
                value,
                depth: settled,
                exact: true,
            })
        } else {
            Ok(Evaluation {
                value: self.partial_f64(e, k).0,
                depth: k,
                exact: false,
            })
        }
    }

    /// `g(e)` as an exact rational.
    pub fn evaluate_exact(&self, e: &DigitExpansion) -> Result<Rational> {
        self.check_base(e)?;
        let (p, beta) = (&self.weights.p, &self.weights.beta);
        let mut sum = Rational::zero();
        let mut prod = Rational::one();
        for k in 1..=self.settled_terms(e) {
            let d = self.term_digit(e, k);
            sum += &beta[d] * &prod;
            prod *= &p[d];
        }
        if e.tail() == Tail::MaxDigits {
            sum += prod;
        }
        Ok(sum)
    }

    /// Expansion of `x` deep enough for `tol`, the term count to sum, and
    /// whether the expansion terminated.
    fn expansion_for(&self, x: &Rational, tol: f64) -> Result<(DigitExpansion, usize, bool)> {
        if !rational::is_unit(x) {
            return Err(Error::OutOfUnitInterval(x.to_string()));
        }
        let base = self.base();
        let k = self.truncation_depth(tol)?;
        if x.is_one() {
            return Ok((DigitExpansion::one(base), k, true));
        }
        let depth = k.max(self.seq.support()).max(1);
        let (digits, exact) = greedy_digits(x, &base, depth);
        let e = DigitExpansion::new(base, digits, Tail::Zeros)?;
        Ok(if exact { (e.trimmed(), k, true) } else { (e, k, false) })
    }

    /// `g(x)` for a rational `x ∈ [0, 1]`, read through its greedy (Zeros)
    /// expansion. Exact when `x` terminates within the digits consulted.
    pub fn evaluate_at(&self, x: &Rational, tol: f64) -> Result<Evaluation> {
        let (e, k, exact) = self.expansion_for(x, tol)?;
        if exact {
            return self.evaluate(&e, tol);
        }
        Ok(Evaluation {
            value: self.partial_f64(&e, k).0,
            depth: k,
            exact: false,
        })
    }

    /// The same truncated series as [`evaluate_at`](Self::evaluate_at),
    /// summed in exact arithmetic.
    pub fn truncated_value(&self, x: &Rational, tol: f64) -> Result<Rational> {
        let (e, k, exact) = self.expansion_for(x, tol)?;
        if exact && self.settled_terms(&e) <= k {
            return self.evaluate_exact(&e);
        }
        Ok(self.first_terms(&e, k)?.into_iter().sum())
    }

    pub fn evaluate_f64(&self, x: f64, tol: f64) -> Result<Evaluation> {
        self.evaluate_at(&rational::from_f64(x)?, tol)
    }

    /// The leading `count` series terms `β_{α_{n_k}} Π_{j<k} p_{α_{n_j}}`.
    pub fn first_terms(&self, e: &DigitExpansion, count: usize) -> Result<Vec<Rational>> {
        self.check_base(e)?;
        let (p, beta) = (&self.weights.p, &self.weights.beta);
        let mut prod = Rational::one();
        let mut terms = Vec::with_capacity(count);
        for k in 1..=count {
            let d = self.term_digit(e, k);
            terms.push(&beta[d] * &prod);
            prod *= &p[d];
        }
        Ok(terms)
    }

    /// The unknown of the system at level `k` (level 0 is `g` itself).
    pub fn level(&self, k: usize) -> SalemFunction {
        SalemFunction {
            weights: self.weights.clone(),
            seq: self.seq.after(k),
        }
    }

    /// `σ_{n̄_k} ∘ ... ∘ σ_{n̄_1}(e)`; `k = 0` is the identity.
    pub fn chain(&self, e: &DigitExpansion, k: usize) -> DigitExpansion {
        delete_positions(e, &self.seq.schedule(k))
    }

    /// Defect of the `k`-th equation of the system at `e`, evaluated at `tol`.
    pub fn residual(&self, e: &DigitExpansion, k: usize, tol: f64) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidArgument("equations are numbered from k = 1".into()));
        }
        self.check_base(e)?;
        let lhs = self.level(k - 1).evaluate(&self.chain(e, k - 1), tol)?.value;
        let d = e.digit_at(self.seq.n_at(k)) as usize;
        let inner = self.level(k).evaluate(&self.chain(e, k), tol)?.value;
        let rhs = self.weights.beta_f64[d] + self.weights.p_f64[d] * inner;
        Ok((lhs - rhs).abs())
    }

    /// The same defect in exact arithmetic.
    pub fn residual_exact(&self, e: &DigitExpansion, k: usize) -> Result<Rational> {
        if k == 0 {
            return Err(Error::InvalidArgument("equations are numbered from k = 1".into()));
        }
        let lhs = self.level(k - 1).evaluate_exact(&self.chain(e, k - 1))?;
        let d = e.digit_at(self.seq.n_at(k)) as usize;
        let inner = self.level(k).evaluate_exact(&self.chain(e, k))?;
        Ok(lhs - (&self.weights.beta[d] + &self.weights.p[d] * inner))
    }

    fn check_word(&self, word: &[u32]) -> Result<()> {
        if word.is_empty() {
            return Err(Error::InvalidArgument("word must be non-empty".into()));
        }
        if let Some(&c) = word.iter().find(|&&c| c >= self.q()) {
            return Err(Error::InvalidArgument(format!("digit {c} is not below q = {}", self.q())));
        }
        Ok(())
    }

    /// `Π_j p_{c_{n_j}}`: the increment of `g` over the set of numbers whose
    /// digits at positions `n_1, ..., n_r` are `c_1, ..., c_r`.
    pub fn increment_product(&self, word: &[u32]) -> Result<Rational> {
        self.check_word(word)?;
        Ok(word.iter().map(|&c| &self.weights.p[c as usize]).product())
    }

    /// `(inf S, sup S)` for that set.
    pub fn set_bounds(&self, word: &[u32]) -> Result<(DigitExpansion, DigitExpansion)> {
        self.check_word(word)?;
        let positions: Vec<usize> = (1..=word.len()).map(|j| self.seq.n_at(j)).collect();
        let len = positions.iter().copied().max().unwrap_or(0);
        let mut low = vec![0; len];
        let mut high = vec![self.q() - 1; len];
        for (&pos, &c) in positions.iter().zip(word) {
            low[pos - 1] = c;
            high[pos - 1] = c;
        }
        Ok((
            DigitExpansion::new(self.base(), low, Tail::Zeros)?,
            DigitExpansion::new(self.base(), high, Tail::MaxDigits)?,
        ))
    }

    /// `g(sup S) - g(inf S)` evaluated directly.
    pub fn set_increment(&self, word: &[u32]) -> Result<Rational> {
        let (low, high) = self.set_bounds(word)?;
        Ok(self.evaluate_exact(&high)? - self.evaluate_exact(&low)?)
    }

    /// `g(sup c) - g(inf c)` for a plain cylinder.
    pub fn cylinder_increment(&self, c: &Cylinder) -> Result<Rational> {
        Ok(self.evaluate_exact(&c.sup())? - self.evaluate_exact(&c.inf())?)
    }

    /// `∫_0^1 g = (Σ_j β_j) / (q - 1)`.
    pub fn integral_closed_form(&self) -> Rational {
        let total: Rational = self.weights.beta.iter().sum();
        total / Rational::from_integer(BigInt::from(self.q() - 1))
    }

    /// Monotonicity verdict from the signs of the weights and the fixed
    /// points of `(n_k)`.
    pub fn classify_monotonicity(&self) -> Monotonicity {
        let p = &self.weights.p;
        let any_zero = p.iter().any(Zero::is_zero);
        let any_negative = p.iter().any(Signed::is_negative);
        let all_positive = p.iter().all(Signed::is_positive);
        let identity = self.seq.is_identity();
        // a finite rearrangement moves finitely many indices, so n_k = k
        // holds for all but finitely many k
        let fixed_almost_everywhere = true;
        let fixed_finitely_often = false;

        if any_zero {
            return Monotonicity::ConstantAE;
        }
        if any_negative {
            if fixed_almost_everywhere {
                return Monotonicity::NoMonotonicityIntervals;
            }
            // weights of both signs with infinitely many moved indices are
            // not covered by any rule; report the weaker verdict
            return Monotonicity::HasSomeMonotonicityInterval;
        }
        if identity {
            return if all_positive {
                Monotonicity::StrictlyIncreasing
            } else {
                Monotonicity::NonDecreasing
            };
        }
        if fixed_finitely_often {
            // unreachable for finite rearrangements
            return Monotonicity::NoMonotonicityIntervals;
        }
        Monotonicity::HasSomeMonotonicityInterval
    }

    /// Continuity at a q-rational point, given in either representation.
    /// On failure of the continuity condition the jump is the difference of
    /// `g` on the two representations.
    pub fn continuity_at(&self, e: &DigitExpansion) -> Result<Continuity> {
        self.check_base(e)?;
        let zeros = e.canonical();
        let dual = match (zeros.tail(), dual_representation(&zeros)) {
            (Tail::Zeros, Some(dual)) => dual,
            _ => return Err(Error::NotQRational(e.to_string())),
        };
        let m = zeros.digits().len();
        if self.seq.continuity_predicate(m) {
            return Ok(Continuity::Continuous);
        }
        Ok(Continuity::Jump(self.evaluate_exact(&zeros)? - self.evaluate_exact(&dual)?))
    }
}

impl fmt::Display for SalemFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.weights.p.iter().map(Rational::to_string).collect();
        write!(f, "q={}; p={}", self.q(), p.join(","))?;
        if !self.seq.is_identity() {
            write!(f, "; seq={}", self.seq)?;
        }
        Ok(())
    }
}

/// Raw fields of the function mini-language
/// `q=2; p=0.3,0.7; seq=perm(1 5 7 3 6 10 2 4 8 9)`.
fn parse_function_fields(s: &str) -> Result<(Vec<Rational>, IndexSequence)> {
    let mut q: Option<usize> = None;
    let mut p: Option<Vec<Rational>> = None;
    let mut seq = IndexSequence::identity();
    for part in s.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
        match key.trim() {
            "q" => {
                q = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad q {value:?}")))?,
                )
            }
            "p" => p = Some(value.split(',').map(parse_rational).collect::<Result<_>>()?),
            "seq" => seq = value.parse()?,
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
    }
    let p = p.ok_or_else(|| Error::Parse("missing p=...".into()))?;
    if let Some(q) = q {
        if q != p.len() {
            return Err(Error::Parse(format!("q = {q} but {} weights given", p.len())));
        }
    }
    Ok((p, seq))
}

impl FromStr for SalemFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, seq) = parse_function_fields(s)?;
        Ok(SalemFunction::new(WeightSet::new(p)?, seq))
    }
}

/// Law of `η = Δ^q_{ξ_1 ξ_2 ...}` with independent digits distributed by
/// `P_q`; its distribution function is the Salem function of the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    f: SalemFunction,
}

impl DistributionSpec {
    pub fn new(p: Vec<Rational>, seq: IndexSequence) -> Result<Self> {
        Ok(DistributionSpec {
            f: SalemFunction::new(WeightSet::probabilities(p)?, seq),
        })
    }

    pub fn function(&self) -> &SalemFunction {
        &self.f
    }

    pub fn cdf(&self, x: &Rational, tol: f64) -> Result<f64> {
        if x.is_negative() {
            return Ok(0.0);
        }
        if x >= &Rational::one() {
            return Ok(1.0);
        }
        // one exact sum and one rounding, so grid values keep the order of
        // the exact truncated values
        Ok(rational::to_f64(&self.f.truncated_value(x, tol)?))
    }

    pub fn cdf_f64(&self, x: f64, tol: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::InvalidArgument("x is NaN".into()));
        }
        if x < 0.0 {
            return Ok(0.0);
        }
        if x >= 1.0 {
            return Ok(1.0);
        }
        self.cdf(&rational::from_f64(x)?, tol)
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, seq) = parse_function_fields(s)?;
        DistributionSpec::new(p, seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio, to_f64};
    use proptest::prelude::*;

    fn f(spec: &str) -> SalemFunction {
        spec.parse().unwrap()
    }

    fn q2(digits: &[u32], tail: Tail) -> DigitExpansion {
        DigitExpansion::new(BaseSpec::Constant(2), digits.to_vec(), tail).unwrap()
    }

    const EXAMPLE_SEQ: &str = "perm(1 5 7 3 6 10 2 4 8 9)";

    #[test]
    fn weight_validation() {
        assert!(WeightSet::new(vec![ratio(3, 10), ratio(7, 10)]).is_ok());
        assert!(WeightSet::new(vec![ratio(3, 10), ratio(6, 10)]).is_err());
        assert!(WeightSet::new(vec![int(1)]).is_err());
        // β_1 = -1/5
        assert!(WeightSet::new(vec![ratio(-1, 5), ratio(6, 5)]).is_err());
        // β_2 = 1
        assert!(WeightSet::new(vec![ratio(1, 2), ratio(1, 2), int(0)]).is_err());
        let w = WeightSet::new(vec![ratio(3, 5), ratio(-1, 5), ratio(3, 5)]).unwrap();
        assert_eq!(w.beta(), &[int(0), ratio(3, 5), ratio(2, 5)]);
        assert!(WeightSet::probabilities(vec![ratio(1, 2), ratio(1, 2), int(0)]).is_ok());
        assert!(WeightSet::probabilities(vec![ratio(3, 5), ratio(-1, 5), ratio(3, 5)]).is_err());
    }

    #[test]
    fn sequence_validation_and_display() {
        assert!(IndexSequence::permutation(vec![1, 3]).is_err());
        assert!(IndexSequence::permutation(vec![2, 2]).is_err());
        assert!(IndexSequence::permutation(vec![0]).is_err());
        assert!(IndexSequence::permutation(vec![1, 2, 3]).unwrap().is_identity());
        let s: IndexSequence = EXAMPLE_SEQ.parse().unwrap();
        assert_eq!(s.to_string(), EXAMPLE_SEQ);
        assert_eq!(s.n_at(4), 3);
        assert_eq!(s.n_at(11), 11);
        assert_eq!(s.schedule(10).bars(), &[1, 4, 5, 2, 3, 5, 1, 1, 1, 1]);
        assert_eq!("identity".parse::<IndexSequence>().unwrap(), IndexSequence::identity());
    }

    #[test]
    fn re_indexed_tail() {
        let s: IndexSequence = EXAMPLE_SEQ.parse().unwrap();
        // after deleting positions 1 and 5 the rest of the order is read in
        // the shortened stream
        assert_eq!(s.after(2).prefix(), &[5, 2, 4, 8, 1, 3, 6, 7]);
        assert!(s.after(10).is_identity());
        for k in 0..10 {
            assert_eq!(s.after(k).n_at(1), s.schedule(k + 1).bars()[k]);
        }
    }

    #[test]
    fn identity_case_is_the_identity_map() {
        let g = f("q=2; p=0.5,0.5");
        for (num, den) in [(0, 1), (1, 3), (5, 7), (1, 1), (3, 8)] {
            let x = ratio(num, den);
            let v = g.evaluate_at(&x, DEFAULT_TOLERANCE).unwrap().value;
            assert!((v - to_f64(&x)).abs() < 1e-12, "{x}: {v}");
        }
        assert_eq!(g.evaluate(&DigitExpansion::one(g.base()), 1e-12).unwrap().value, 1.0);
        let e = q2(&[1, 0, 1, 1], Tail::Zeros);
        assert_eq!(g.evaluate_exact(&e).unwrap(), e.value());
    }

    #[test]
    fn endpoints() {
        let g = f(&format!("q=3; p=0.2,0.5,0.3; seq={EXAMPLE_SEQ}"));
        let base = g.base();
        assert_eq!(g.evaluate_exact(&DigitExpansion::zero(base.clone())).unwrap(), int(0));
        assert_eq!(g.evaluate_exact(&DigitExpansion::one(base)).unwrap(), int(1));
    }

    #[test]
    fn evaluation_errors() {
        let g = f("q=2; p=0.3,0.7");
        let e = q2(&[1], Tail::Zeros);
        assert!(matches!(g.evaluate(&e, 0.0), Err(Error::InvalidTolerance(_))));
        assert!(g.evaluate(&e, -1.0).is_err());
        assert!(g.evaluate(&e, f64::NAN).is_err());
        let e3 = DigitExpansion::new(BaseSpec::Constant(3), vec![1], Tail::Zeros).unwrap();
        assert!(matches!(g.evaluate(&e3, 1e-9), Err(Error::Inconsistent(_))));
        assert!(g.evaluate_at(&ratio(3, 2), 1e-9).is_err());
    }

    #[test]
    fn exact_terminating_value() {
        // g(1/2) = β_1 = 3/10
        let g = f("q=2; p=0.3,0.7");
        let e = q2(&[1], Tail::Zeros);
        assert_eq!(g.evaluate_exact(&e).unwrap(), ratio(3, 10));
        let ev = g.evaluate(&e, 1e-12).unwrap();
        assert!(ev.exact);
        assert_eq!(ev.depth, 1);
        assert!((ev.value - 0.3).abs() < 1e-15);
    }

    #[test]
    fn truncated_evaluation_respects_the_bound() {
        let g = f("q=2; p=0.3,0.7");
        let x = ratio(1, 3);
        let coarse = g.evaluate_at(&x, 1e-6).unwrap();
        let fine = g.evaluate_at(&x, 1e-7).unwrap();
        assert!(!coarse.exact);
        assert!((coarse.value - fine.value).abs() <= 1e-6);
        assert_eq!(g.truncation_depth(1e-6).unwrap(), coarse.depth);
    }

    #[test]
    fn exact_truncation_matches_float_sum() {
        let g = f(&format!("q=3; p=1/6,1/2,1/3; seq={EXAMPLE_SEQ}"));
        for x in [ratio(1, 7), ratio(4, 9), int(0), int(1), ratio(22, 27)] {
            let exact = g.truncated_value(&x, 1e-10).unwrap();
            let float = g.evaluate_at(&x, 1e-10).unwrap().value;
            assert!((to_f64(&exact) - float).abs() < 1e-14, "{x}");
        }
        assert_eq!(g.truncated_value(&ratio(1, 3), 1e-10).unwrap(), g.evaluate_exact(&"q3:[1]:zeros".parse().unwrap()).unwrap());
    }

    #[test]
    fn example_sequence_terms() {
        let g = f(&format!("q=2; p=0.3,0.7; seq={EXAMPLE_SEQ}"));
        let digits = [1, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1, 1];
        let e = q2(&digits, Tail::Zeros);
        let terms = g.first_terms(&e, 4).unwrap();
        let (p, b) = (g.weights().p(), g.weights().beta());
        let a = |k: usize| digits[k - 1] as usize;
        assert_eq!(terms[0], b[a(1)].clone());
        assert_eq!(terms[1], &b[a(5)] * &p[a(1)]);
        assert_eq!(terms[2], &b[a(7)] * &p[a(1)] * &p[a(5)]);
        assert_eq!(terms[3], &b[a(3)] * &p[a(1)] * &p[a(5)] * &p[a(7)]);
        let partial: Rational = g.first_terms(&e, 12).unwrap().into_iter().sum();
        assert_eq!(partial, g.evaluate_exact(&e).unwrap());
        assert!(g
            .first_terms(&DigitExpansion::zero(g.base()), 5)
            .unwrap()
            .iter()
            .all(Zero::is_zero));
    }

    #[test]
    fn identity_residual_vanishes() {
        let g = f("q=2; p=0.5,0.5");
        let e = q2(&[1, 0, 1, 1, 0, 1], Tail::Zeros);
        for k in 1..=10 {
            assert_eq!(g.residual_exact(&e, k).unwrap(), int(0));
            assert_eq!(g.residual(&e, k, 1e-12).unwrap(), 0.0);
        }
        assert!(g.residual(&e, 0, 1e-12).is_err());
    }

    #[test]
    fn example_sequence_residuals() {
        let g = f(&format!("q=3; p=1/6,1/2,1/3; seq={EXAMPLE_SEQ}"));
        let e = DigitExpansion::new(g.base(), vec![2, 0, 1, 1, 2, 0, 2, 1, 0, 1, 2], Tail::Zeros).unwrap();
        for k in 1..=20 {
            assert_eq!(g.residual_exact(&e, k).unwrap(), int(0), "k = {k}");
            assert!(g.residual(&e, k, 1e-12).unwrap() < 1e-12);
        }
        let zero = DigitExpansion::zero(g.base());
        for k in 1..=5 {
            assert_eq!(g.residual(&zero, k, 1e-12).unwrap(), 0.0);
        }
    }

    #[test]
    fn increments() {
        let g = f("q=2; p=0.3,0.7");
        // word (1, 0): p_1 p_0
        assert_eq!(g.increment_product(&[1, 0]).unwrap(), ratio(21, 100));
        assert_eq!(g.set_increment(&[1, 0]).unwrap(), ratio(21, 100));
        let c = Cylinder::new(g.base(), vec![1, 0]).unwrap();
        assert_eq!(g.cylinder_increment(&c).unwrap(), ratio(21, 100));
        assert_eq!(g.increment_product(&[0]).unwrap(), ratio(3, 10));
        let total: Rational = (0..2)
            .flat_map(|a| (0..2).map(move |b| [a, b]))
            .map(|w| g.increment_product(&w).unwrap())
            .sum();
        assert_eq!(total, int(1));
        assert!(g.increment_product(&[]).is_err());
        assert!(g.increment_product(&[2]).is_err());
    }

    #[test]
    fn increments_under_a_rearrangement() {
        let g = f(&format!("q=2; p=0.3,0.7; seq={EXAMPLE_SEQ}"));
        for w in [vec![1], vec![0, 1, 1], vec![1, 1, 0, 0, 1]] {
            assert_eq!(g.set_increment(&w).unwrap(), g.increment_product(&w).unwrap());
        }
        // plain cylinder [1] under (2, 1): g(1) - g(1/2) evaluated directly
        let h = f("q=2; p=0.3,0.7; seq=perm(2 1)");
        let c = Cylinder::new(h.base(), vec![1]).unwrap();
        let lo = h.evaluate_exact(&c.inf()).unwrap();
        assert_eq!(lo, ratio(9, 100));
        assert_eq!(h.cylinder_increment(&c).unwrap(), int(1) - ratio(9, 100));
    }

    #[test]
    fn zero_weight_kills_the_increment() {
        let g = f("q=3; p=0.5,0,0.5");
        let c = Cylinder::new(g.base(), vec![2, 1, 0]).unwrap();
        assert_eq!(g.cylinder_increment(&c).unwrap(), int(0));
    }

    #[test]
    fn integral_values() {
        assert_eq!(f("q=2; p=0.5,0.5").integral_closed_form(), ratio(1, 2));
        assert_eq!(f("q=2; p=0.3,0.7").integral_closed_form(), ratio(3, 10));
        assert_eq!(f("q=3; p=1/3,1/3,1/3").integral_closed_form(), ratio(1, 2));
    }

    #[test]
    fn integral_by_midpoint_quadrature() {
        // independent route: midpoint rule over 10^5 nodes
        let g = f("q=2; p=0.3,0.7");
        let n = 100_000;
        let sum: f64 = (0..n)
            .map(|i| g.evaluate_at(&ratio(2 * i + 1, 2 * n), 1e-9).unwrap().value)
            .sum();
        let quad = sum / n as f64;
        assert!((quad - 0.3).abs() < 2.0 / (n as f64).sqrt() + 1e-9, "{quad}");
    }

    #[test]
    fn monotonicity_classes() {
        use Monotonicity::*;
        assert_eq!(f("q=2; p=0.3,0.7").classify_monotonicity(), StrictlyIncreasing);
        assert_eq!(f("q=3; p=0.5,0,0.5").classify_monotonicity(), ConstantAE);
        assert_eq!(f("q=3; p=0.6,-0.2,0.6").classify_monotonicity(), NoMonotonicityIntervals);
        assert_eq!(
            f("q=3; p=0.6,-0.2,0.6; seq=perm(2 1)").classify_monotonicity(),
            NoMonotonicityIntervals
        );
        assert_eq!(
            f("q=2; p=0.3,0.7; seq=perm(2 1)").classify_monotonicity(),
            HasSomeMonotonicityInterval
        );
    }

    #[test]
    fn continuity() {
        let id = f("q=2; p=0.3,0.7");
        for digits in [vec![1], vec![0, 1], vec![1, 1, 0, 1]] {
            assert_eq!(id.continuity_at(&q2(&digits, Tail::Zeros)).unwrap(), Continuity::Continuous);
        }
        let swapped = f("q=2; p=0.3,0.7; seq=perm(2 1)");
        let half = q2(&[1], Tail::Zeros);
        let Continuity::Jump(j) = swapped.continuity_at(&half).unwrap() else {
            panic!("1/2 is a discontinuity of the swapped function");
        };
        let y1 = swapped.evaluate(&half, 1e-12).unwrap().value;
        let y2 = swapped.evaluate(&q2(&[0], Tail::MaxDigits), 1e-12).unwrap().value;
        assert!((to_f64(&j) - (y1 - y2)).abs() < 2e-12);
        // p_0 (p_0 - 1 - p_1)
        assert_eq!(j, ratio(3, 10) * (ratio(3, 10) - int(1) - ratio(7, 10)));
        // the same point handed over in its max-digit form
        assert_eq!(
            swapped.continuity_at(&q2(&[0], Tail::MaxDigits)).unwrap(),
            Continuity::Jump(j)
        );
        assert_eq!(swapped.continuity_at(&q2(&[0, 0, 1], Tail::Zeros)).unwrap(), Continuity::Continuous);
        assert!(matches!(
            swapped.continuity_at(&DigitExpansion::zero(swapped.base())),
            Err(Error::NotQRational(_))
        ));
        assert!(swapped.continuity_at(&DigitExpansion::one(swapped.base())).is_err());
    }

    #[test]
    fn distribution_function() {
        let d: DistributionSpec = "q=2; p=0.5,0.5".parse().unwrap();
        assert_eq!(d.cdf_f64(-0.5, 1e-12).unwrap(), 0.0);
        assert_eq!(d.cdf_f64(2.0, 1e-12).unwrap(), 1.0);
        assert_eq!(d.cdf(&int(1), 1e-12).unwrap(), 1.0);
        assert!((d.cdf(&ratio(1, 3), 1e-12).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let z: DistributionSpec = "q=3; p=0.5,0.5,0".parse().unwrap();
        assert!((z.cdf(&ratio(2, 3), 1e-12).unwrap() - 1.0).abs() < 1e-12);
        assert!("q=3; p=0.6,-0.2,0.6".parse::<DistributionSpec>().is_err());
    }

    #[test]
    fn function_notation() {
        let g = f(&format!("q=2; p=0.3,0.7; seq={EXAMPLE_SEQ}"));
        assert_eq!(g.to_string(), format!("q=2; p=3/10,7/10; seq={EXAMPLE_SEQ}"));
        assert_eq!(f(&g.to_string()), g);
        assert_eq!(f("p=1/2,1/2"), f("q=2;p=0.5,0.5"));
        for bad in ["q=2; p=0.3,0.6", "q=3; p=0.5,0.5", "q=2", "q=2; p=0.5,0.5; seq=perm(1 3)", "q=2; p=0.5,0.5; r=1"] {
            assert!(bad.parse::<SalemFunction>().is_err(), "{bad}");
        }
    }

    fn arb_positive_function() -> impl Strategy<Value = SalemFunction> {
        (2usize..=4, proptest::collection::vec(1i64..=9, 4), any::<bool>()).prop_map(|(q, w, permuted)| {
            let w = &w[..q];
            let total: i64 = w.iter().sum();
            let p = w.iter().map(|&wi| ratio(wi, total)).collect();
            let seq = if permuted {
                EXAMPLE_SEQ.parse().unwrap()
            } else {
                IndexSequence::identity()
            };
            SalemFunction::new(WeightSet::new(p).unwrap(), seq)
        })
    }

    proptest! {
        #[test]
        fn values_stay_in_unit_interval(g in arb_positive_function(), num in 0i64..=1000) {
            let v = g.evaluate_at(&ratio(num, 1000), 1e-12).unwrap().value;
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }

        #[test]
        fn identity_sequence_is_strictly_increasing(g in arb_positive_function(), a in 0i64..1000, b in 0i64..1000) {
            prop_assume!(a != b);
            let g = SalemFunction::new(g.weights().clone(), IndexSequence::identity());
            let (lo, hi) = (a.min(b), a.max(b));
            let ga = g.evaluate_at(&ratio(lo, 1000), 1e-12).unwrap().value;
            let gb = g.evaluate_at(&ratio(hi, 1000), 1e-12).unwrap().value;
            prop_assert!(ga < gb);
        }

        #[test]
        fn tolerance_bound_between_depths(g in arb_positive_function(), num in 1i64..999, tol_exp in 3i32..10) {
            let tol = 10f64.powi(-tol_exp);
            let x = ratio(num, 997);
            let a = g.evaluate_at(&x, tol).unwrap().value;
            let b = g.evaluate_at(&x, tol / 10.0).unwrap().value;
            prop_assert!((a - b).abs() <= tol);
        }

        #[test]
        fn continuous_points_agree_on_both_forms(
            g in arb_positive_function(),
            raw in proptest::collection::vec(0u32..4, 1..12),
        ) {
            let q = g.q();
            let mut digits: Vec<u32> = raw.iter().map(|d| d % q).collect();
            *digits.last_mut().unwrap() = 1;
            let e = DigitExpansion::new(g.base(), digits, Tail::Zeros).unwrap();
            let dual = dual_representation(&e).unwrap();
            match g.continuity_at(&e).unwrap() {
                Continuity::Continuous => {
                    prop_assert_eq!(g.evaluate_exact(&e).unwrap(), g.evaluate_exact(&dual).unwrap());
                }
                Continuity::Jump(j) => {
                    prop_assert_eq!(j, g.evaluate_exact(&e).unwrap() - g.evaluate_exact(&dual).unwrap());
                }
            }
        }

        #[test]
        fn residuals_vanish(g in arb_positive_function(), raw in proptest::collection::vec(0u32..4, 0..14), k in 1usize..=20) {
            let q = g.q();
            let e = DigitExpansion::new(g.base(), raw.iter().map(|d| d % q).collect(), Tail::Zeros).unwrap();
            prop_assert_eq!(g.residual_exact(&e, k).unwrap(), int(0));
        }
    }
}
