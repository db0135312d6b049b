//! q-ary and Cantor-series digit expansions of numbers in `[0, 1]`.
//!
//! An expansion is a finite digit prefix followed by one of the two tails that
//! appear in dual representations: all zeros, or every digit at its maximum
//! `q_k - 1`. Every value here is therefore computable exactly.
//!
//! Textual notation: `q10:[2,5]:zeros`, `Q(2,3,4|5):[1,2]:max`. A Cantor base
//! lists its prefix entries before `|` and the repeating tail entry after it.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Base sequence `Q = (q_k)`: constant, or an explicit prefix followed by a
/// repeating tail value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BaseSpec {
    Constant(u32),
    Cantor { prefix: Vec<u32>, tail: u32 },
}

impl BaseSpec {
    pub fn constant(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidBase(format!("q = {q} must be at least 2")));
        }
        Ok(BaseSpec::Constant(q))
    }

    pub fn cantor(prefix: Vec<u32>, tail: u32) -> Result<Self> {
        if let Some(bad) = prefix.iter().chain(std::iter::once(&tail)).find(|&&q| q < 2) {
            return Err(Error::InvalidBase(format!("base entry {bad} must be at least 2")));
        }
        Ok(BaseSpec::Cantor { prefix, tail })
    }

    /// `q_k` for a 1-based position `k`.
    pub fn base_at(&self, k: usize) -> u32 {
        debug_assert!(k >= 1, "positions are 1-based");
        match self {
            BaseSpec::Constant(q) => *q,
            BaseSpec::Cantor { prefix, tail } => prefix.get(k - 1).copied().unwrap_or(*tail),
        }
    }

    /// Number of leading entries that may differ from the tail value.
    pub fn settled_from(&self) -> usize {
        match self {
            BaseSpec::Constant(_) => 0,
            BaseSpec::Cantor { prefix, .. } => prefix.len(),
        }
    }

    pub fn tail_value(&self) -> u32 {
        match self {
            BaseSpec::Constant(q) => *q,
            BaseSpec::Cantor { tail, .. } => *tail,
        }
    }

    /// `Some(q)` when every entry equals `q`.
    pub fn constant_base(&self) -> Option<u32> {
        match self {
            BaseSpec::Constant(q) => Some(*q),
            BaseSpec::Cantor { prefix, tail } => prefix.iter().all(|q| q == tail).then_some(*tail),
        }
    }

    /// `q_1 q_2 ... q_n` (1 for `n = 0`).
    pub fn product(&self, n: usize) -> BigInt {
        let mut acc = BigInt::one();
        let settled = self.settled_from().min(n);
        for k in 1..=settled {
            acc *= self.base_at(k);
        }
        acc * num_traits::pow(BigInt::from(self.tail_value()), n - settled)
    }

    /// The sequence with entry `m` removed (`Q \ {q_m}`).
    pub fn without_position(&self, m: usize) -> BaseSpec {
        match self {
            BaseSpec::Constant(q) => BaseSpec::Constant(*q),
            BaseSpec::Cantor { prefix, tail } => {
                let mut prefix = prefix.clone();
                if m >= 1 && m <= prefix.len() {
                    prefix.remove(m - 1);
                }
                BaseSpec::Cantor { prefix, tail: *tail }
            }
        }
    }

    /// Whether both sequences agree at every position.
    pub fn same_sequence(&self, other: &BaseSpec) -> bool {
        let depth = self.settled_from().max(other.settled_from()) + 1;
        (1..=depth).all(|k| self.base_at(k) == other.base_at(k))
    }
}

impl fmt::Display for BaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseSpec::Constant(q) => write!(f, "q{q}"),
            BaseSpec::Cantor { prefix, tail } => {
                let entries: Vec<String> = prefix.iter().map(u32::to_string).collect();
                write!(f, "Q({}|{tail})", entries.join(","))
            }
        }
    }
}

impl FromStr for BaseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("Q(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Parse(format!("unterminated Cantor base {s:?}")))?;
            let (prefix, tail) = inner
                .split_once('|')
                .ok_or_else(|| Error::Parse(format!("Cantor base {s:?} needs a '|tail' entry")))?;
            let prefix = parse_list(prefix)?;
            let tail = parse_u32(tail)?;
            BaseSpec::cantor(prefix, tail)
        } else if let Some(rest) = s.strip_prefix('q') {
            BaseSpec::constant(parse_u32(rest)?)
        } else {
            Err(Error::Parse(format!("unknown base {s:?}")))
        }
    }
}

fn parse_u32(s: &str) -> Result<u32> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("expected a non-negative integer, got {s:?}")))
}

fn parse_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_u32)
        .collect()
}

/// Digits beyond the explicit prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tail {
    Zeros,
    MaxDigits,
}

impl Tail {
    pub fn digit(self, base: u32) -> u32 {
        match self {
            Tail::Zeros => 0,
            Tail::MaxDigits => base - 1,
        }
    }
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tail::Zeros => "zeros",
            Tail::MaxDigits => "max",
        })
    }
}

/// `Δ^Q_{i_1 i_2 ...}`: base, finite prefix, symbolic tail.
///
/// Zero is the empty prefix with a `Zeros` tail and one is the empty prefix
/// with a `MaxDigits` tail. Equality is structural; use
/// [`DigitExpansion::same_stream`] to compare digit streams.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigitExpansion {
    base: BaseSpec,
    digits: Vec<u32>,
    tail: Tail,
}

impl DigitExpansion {
    pub fn new(base: BaseSpec, digits: Vec<u32>, tail: Tail) -> Result<Self> {
        for (i, &d) in digits.iter().enumerate() {
            let q = base.base_at(i + 1);
            if d >= q {
                return Err(Error::DigitOutOfRange {
                    position: i + 1,
                    digit: d,
                    base: q,
                });
            }
        }
        Ok(DigitExpansion { base, digits, tail })
    }

    pub fn zero(base: BaseSpec) -> Self {
        DigitExpansion {
            base,
            digits: Vec::new(),
            tail: Tail::Zeros,
        }
    }

    pub fn one(base: BaseSpec) -> Self {
        DigitExpansion {
            base,
            digits: Vec::new(),
            tail: Tail::MaxDigits,
        }
    }

    pub fn base(&self) -> &BaseSpec {
        &self.base
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Digit at 1-based position `k`, reading into the tail when needed.
    pub fn digit_at(&self, k: usize) -> u32 {
        match self.digits.get(k - 1) {
            Some(&d) => d,
            None => self.tail.digit(self.base.base_at(k)),
        }
    }

    /// The first `n` digits, tail digits included.
    pub fn materialize(&self, n: usize) -> Vec<u32> {
        (1..=n).map(|k| self.digit_at(k)).collect()
    }

    /// Position after which both the digits and the base are uniform.
    pub fn settled_len(&self) -> usize {
        self.digits.len().max(self.base.settled_from())
    }

    /// Same number written with the prefix extended to at least `n` digits.
    pub fn padded(&self, n: usize) -> DigitExpansion {
        let len = self.digits.len().max(n);
        DigitExpansion {
            base: self.base.clone(),
            digits: self.materialize(len),
            tail: self.tail,
        }
    }

    /// Drops prefix digits that merely repeat the tail.
    pub fn trimmed(&self) -> DigitExpansion {
        let mut digits = self.digits.clone();
        while let Some(&last) = digits.last() {
            if last != self.tail.digit(self.base.base_at(digits.len())) {
                break;
            }
            digits.pop();
        }
        DigitExpansion {
            base: self.base.clone(),
            digits,
            tail: self.tail,
        }
    }

    /// Digit-stream equality over the same base sequence.
    pub fn same_stream(&self, other: &DigitExpansion) -> bool {
        if !self.base.same_sequence(&other.base) || self.tail != other.tail {
            return false;
        }
        let depth = self.settled_len().max(other.settled_len()) + 1;
        (1..=depth).all(|k| self.digit_at(k) == other.digit_at(k))
    }

    /// `x = Σ i_k / (q_1 ... q_k)` with the tail summed in closed form.
    pub fn value(&self) -> Rational {
        // Horner over the common denominator q_1 ... q_n
        let mut numer = BigInt::zero();
        let mut denom = BigInt::one();
        for (i, &d) in self.digits.iter().enumerate() {
            let q = self.base.base_at(i + 1);
            numer = numer * q + d;
            denom *= q;
        }
        if self.tail == Tail::MaxDigits {
            numer += 1;
        }
        Rational::new(numer, denom)
    }

    /// The Zeros form when this number is Q-rational, otherwise `self`.
    pub fn canonical(&self) -> DigitExpansion {
        match self.tail {
            Tail::Zeros => self.trimmed(),
            Tail::MaxDigits => match dual_representation(self) {
                Some(dual) => dual,
                None => self.trimmed(),
            },
        }
    }
}

impl fmt::Display for DigitExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: Vec<String> = self.digits.iter().map(u32::to_string).collect();
        write!(f, "{}:[{}]:{}", self.base, digits.join(","), self.tail)
    }
}

impl FromStr for DigitExpansion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        // the base may itself contain no ':'; split from the right
        let (rest, tail) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::Parse(format!("expected base:[digits]:tail, got {s:?}")))?;
        let (base, digits) = rest
            .rsplit_once(':')
            .ok_or_else(|| Error::Parse(format!("expected base:[digits]:tail, got {s:?}")))?;
        let tail = match tail.trim() {
            "zeros" | "zero" | "0" => Tail::Zeros,
            "max" | "maxdigits" => Tail::MaxDigits,
            other => return Err(Error::Parse(format!("unknown tail {other:?}"))),
        };
        let digits = digits.trim();
        let inner = digits
            .strip_prefix('[')
            .and_then(|d| d.strip_suffix(']'))
            .ok_or_else(|| Error::Parse(format!("digit list must be bracketed: {digits:?}")))?;
        DigitExpansion::new(base.parse()?, parse_list(inner)?, tail)
    }
}

/// Value of an expansion; total on well-formed input.
pub fn value_of(e: &DigitExpansion) -> Rational {
    e.value()
}

/// Greedy digit extraction of `x` to `depth` digits.
///
/// When `x` terminates within `depth` digits the result has exactly that
/// value, written in the form selected by `tail_pref` (if the number has
/// two). Otherwise the prefix holds the first `depth` greedy digits and the
/// `Zeros` tail marks the truncation. One has only the `MaxDigits` form.
pub fn expansion_of(x: &Rational, base: &BaseSpec, depth: usize, tail_pref: Tail) -> Result<DigitExpansion> {
    if depth == 0 {
        return Err(Error::ZeroDepth);
    }
    if x.is_negative() || x > &Rational::one() {
        return Err(Error::OutOfUnitInterval(x.to_string()));
    }
    if x.is_one() {
        return Ok(DigitExpansion::one(base.clone()));
    }
    let (digits, exact) = greedy_digits(x, base, depth);
    let zeros = DigitExpansion {
        base: base.clone(),
        digits,
        tail: Tail::Zeros,
    };
    if exact && tail_pref == Tail::MaxDigits {
        if let Some(dual) = dual_representation(&zeros) {
            return Ok(dual);
        }
    }
    Ok(zeros)
}

/// First `depth` greedy digits of `x` in `[0, 1)` and whether the remainder
/// vanished within them.
pub(crate) fn greedy_digits(x: &Rational, base: &BaseSpec, depth: usize) -> (Vec<u32>, bool) {
    let den = x.denom();
    let mut rem = x.numer().clone();
    let mut digits = Vec::with_capacity(depth);
    for k in 1..=depth {
        let (d, r) = (rem * base.base_at(k)).div_rem(den);
        digits.push(d.to_u32().expect("greedy digit fits the alphabet"));
        rem = r;
    }
    (digits, rem.is_zero())
}

/// The other representation of a Q-rational number.
///
/// `None` for numbers with a single representation, which in this
/// representation means zero (`[]:zeros`) and one (`[]:max`).
pub fn dual_representation(e: &DigitExpansion) -> Option<DigitExpansion> {
    let t = e.trimmed();
    let mut digits = t.digits;
    let m = digits.len();
    if m == 0 {
        return None;
    }
    let tail = match t.tail {
        Tail::Zeros => {
            digits[m - 1] -= 1;
            Tail::MaxDigits
        }
        Tail::MaxDigits => {
            digits[m - 1] += 1;
            Tail::Zeros
        }
    };
    Some(DigitExpansion {
        base: t.base,
        digits,
        tail,
    })
}

/// `Δ^Q_{c_1 ... c_m}`: the numbers whose first `m` digits are the word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cylinder {
    base: BaseSpec,
    word: Vec<u32>,
}

impl Cylinder {
    pub fn new(base: BaseSpec, word: Vec<u32>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidArgument("cylinder rank must be at least 1".into()));
        }
        // validates the alphabet
        DigitExpansion::new(base.clone(), word.clone(), Tail::Zeros)?;
        Ok(Cylinder { base, word })
    }

    pub fn base(&self) -> &BaseSpec {
        &self.base
    }

    pub fn word(&self) -> &[u32] {
        &self.word
    }

    pub fn rank(&self) -> usize {
        self.word.len()
    }

    pub fn inf(&self) -> DigitExpansion {
        DigitExpansion {
            base: self.base.clone(),
            digits: self.word.clone(),
            tail: Tail::Zeros,
        }
    }

    pub fn sup(&self) -> DigitExpansion {
        DigitExpansion {
            base: self.base.clone(),
            digits: self.word.clone(),
            tail: Tail::MaxDigits,
        }
    }

    pub fn length(&self) -> Rational {
        Rational::new(BigInt::one(), self.base.product(self.rank()))
    }

    /// Every cylinder of rank `m` in increasing order.
    pub fn all_of_rank(base: &BaseSpec, m: usize) -> Vec<Cylinder> {
        let mut words: Vec<Vec<u32>> = vec![Vec::new()];
        for k in 1..=m {
            let q = base.base_at(k);
            words = words
                .into_iter()
                .flat_map(|w| {
                    (0..q).map(move |d| {
                        let mut w = w.clone();
                        w.push(d);
                        w
                    })
                })
                .collect();
        }
        words
            .into_iter()
            .map(|word| Cylinder {
                base: base.clone(),
                word,
            })
            .collect()
    }
}

/// Closed interval `[inf, sup]` occupied by the cylinder.
pub fn cylinder_interval(c: &Cylinder) -> (Rational, Rational) {
    (c.inf().value(), c.sup().value())
}
