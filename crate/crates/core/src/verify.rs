//! Named invariant suites with counterexample reporting.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expansion::{dual_representation, BaseSpec, Cylinder, DigitExpansion, Tail};
use crate::measure::{exact_comparison, exact_sublevel, DeletionMap};
use crate::montecarlo::monte_carlo_comparison;
use crate::plm::{sublevel_measure, PiecewiseLinearMap, DEFAULT_BRANCH_BUDGET};
use crate::rational::{self, ratio, Rational};
use crate::salem::{Continuity, SalemFunction};
use crate::shift::{
    compose_two, delete_positions, generalized_shift, generalized_shift_value, make_schedule, shift, shift_n,
};

/// Index order used when a suite needs a non-trivial rearrangement.
pub const EXAMPLE_ORDER: [usize; 10] = [1, 5, 7, 3, 6, 10, 2, 4, 8, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemma1,
    Operators,
    Equation,
    Continuity,
    Integral,
    Increment,
    Measure,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 8] = [
        "lemma1",
        "operators",
        "equation",
        "continuity",
        "integral",
        "increment",
        "measure",
        "all",
    ];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lemma1" => Suite::Lemma1,
            "operators" => Suite::Operators,
            "equation" => Suite::Equation,
            "continuity" => Suite::Continuity,
            "integral" => Suite::Integral,
            "increment" => Suite::Increment,
            "measure" => Suite::Measure,
            "all" => Suite::All,
            other => {
                return Err(Error::Parse(format!(
                    "unknown suite {other:?}; expected one of {}",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Case count on success, first counterexample on failure.
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Runs `cases`, stopping at the first counterexample.
struct Tally {
    name: String,
    cases: usize,
    failure: Option<String>,
}

impl Tally {
    fn new(name: impl Into<String>) -> Self {
        Tally {
            name: name.into(),
            cases: 0,
            failure: None,
        }
    }

    fn case(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        if self.failure.is_some() {
            return;
        }
        self.cases += 1;
        if !ok {
            self.failure = Some(describe());
        }
    }

    fn finish(self) -> Check {
        match self.failure {
            Some(f) => Check {
                name: self.name,
                passed: false,
                detail: format!("counterexample: {f}"),
            },
            None => Check {
                name: self.name,
                passed: true,
                detail: format!("{} cases", self.cases),
            },
        }
    }
}

/// Deterministic sample of terminating expansions with both tail kinds.
pub fn corpus(base: &BaseSpec, count: usize, max_len: usize, seed: u64) -> Vec<DigitExpansion> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let len = rng.random_range(0..=max_len);
            let digits = (1..=len).map(|k| rng.random_range(0..base.base_at(k))).collect();
            let tail = if rng.random_bool(0.25) { Tail::MaxDigits } else { Tail::Zeros };
            DigitExpansion::new(base.clone(), digits, tail).expect("digits drawn below the base")
        })
        .collect()
}

fn bases() -> Vec<BaseSpec> {
    vec![
        BaseSpec::Constant(2),
        BaseSpec::Constant(3),
        BaseSpec::Constant(10),
        BaseSpec::cantor(vec![2, 3, 4, 5], 3).expect("valid bases"),
    ]
}

fn chain(e: &DigitExpansion, indices: &[usize]) -> DigitExpansion {
    indices.iter().fold(e.clone(), |acc, &m| generalized_shift(&acc, m))
}

/// Ordered selections of distinct elements from `1..=n`.
pub fn all_schedules(n: usize) -> Vec<Vec<usize>> {
    fn extend(n: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(current.clone());
        for v in 1..=n {
            if !current.contains(&v) {
                current.push(v);
                extend(n, current, out);
                current.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(n, &mut Vec::new(), &mut out);
    out
}

/// Digits left after striking the listed original positions.
pub fn strike(digits: &[u32], positions: &BTreeSet<usize>) -> Vec<u32> {
    digits
        .iter()
        .enumerate()
        .filter(|(i, _)| !positions.contains(&(i + 1)))
        .map(|(_, &d)| d)
        .collect()
}

fn lemma1() -> Vec<Check> {
    let mut first = Tally::new("shift after repeated sigma_2 equals sigma^(m+1)");
    let mut runs = Tally::new("consecutive chain k, k+1, ..., k+n-1 then sigma^(k_n) equals sigma^(k_n+n)");
    let mut decreasing = Tally::new("decreasing chain k_1 > ... > k_n then sigma^(k_1-n) equals sigma^(k_1)");
    let mut difference = Tally::new("x - sigma_m(x) = i_m/P_m + sigma^m(x)(1 - q_m)/P_m");
    let mut value = Tally::new("sigma_m value formula matches digit deletion");
    for (b, base) in bases().iter().enumerate() {
        for e in corpus(base, 40, 12, 100 + b as u64) {
            for m in 0..=6 {
                let lhs = shift(&chain(&e, &vec![2; m]));
                first.case(lhs.same_stream(&shift_n(&e, m + 1)), || format!("{e}, m = {m}"));
            }
            for k in 1..=4 {
                for n in 1..=4 {
                    let ks: Vec<usize> = (k..k + n).collect();
                    let kn = k + n - 1;
                    let lhs = shift_n(&chain(&e, &ks), kn);
                    runs.case(lhs.same_stream(&shift_n(&e, kn + n)), || format!("{e}, k = {ks:?}"));
                }
            }
            for mask in 1u32..(1 << 7) {
                let ks: Vec<usize> = (1..=7).rev().filter(|i| mask & (1 << (i - 1)) != 0).collect();
                let lhs = shift_n(&chain(&e, &ks), ks[0] - ks.len());
                decreasing.case(lhs.same_stream(&shift_n(&e, ks[0])), || format!("{e}, k = {ks:?}"));
            }
            let x = e.value();
            for m in 1..=8 {
                let pm = Rational::from_integer(base.product(m));
                let im = Rational::from_integer(BigInt::from(e.digit_at(m)));
                let qm = Rational::from_integer(BigInt::from(base.base_at(m)));
                let rhs = im / &pm + shift_n(&e, m).value() * (Rational::one() - qm) / &pm;
                let direct = generalized_shift(&e, m).value();
                difference.case(&x - &direct == rhs, || format!("{e}, m = {m}"));
                let formula = generalized_shift_value(&x, &e, m);
                value.case(formula.as_ref() == Ok(&direct), || format!("{e}, m = {m}: {formula:?} vs {direct}"));
            }
        }
    }
    let mut slope = Tally::new("sigma_m has slope q on every rank-m cylinder");
    let mut jumps = Tally::new("sigma_m jumps exactly at endpoints whose last nonzero digit is at position m");
    for q in [2u32, 3, 10] {
        for m in 1..=3 {
            let map = PiecewiseLinearMap::generalized_shift(q, m, DEFAULT_BRANCH_BUDGET).expect("small map");
            let qr = Rational::from_integer(BigInt::from(q));
            slope.case(map.branches().iter().all(|b| b.slope == qr), || format!("q = {q}, m = {m}"));
            for (j, w) in map.branches().windows(2).enumerate() {
                // the endpoint (j + 1) / q^m ends in a nonzero m-th digit
                // exactly when q does not divide j + 1
                let expected = (j + 1) % q as usize != 0;
                let jump = w[0].eval(&w[0].hi) != w[1].eval(&w[1].lo);
                jumps.case(jump == expected, || format!("q = {q}, m = {m}, at {}", w[0].hi));
            }
        }
    }
    vec![
        first.finish(),
        runs.finish(),
        decreasing.finish(),
        difference.finish(),
        value.finish(),
        slope.finish(),
        jumps.finish(),
    ]
}

fn operators() -> Vec<Check> {
    let mut pairs = Tally::new("sigma_n2 after sigma_n1 matches the two-deletion rule");
    let mut schedules = Tally::new("bar-index schedules delete exactly the listed positions");
    let all = all_schedules(7);
    for q in [2u32, 10] {
        let base = BaseSpec::Constant(q);
        for e in corpus(&base, 6, 10, 7 + q as u64) {
            for n1 in 0..=8 {
                for n2 in 0..=8 {
                    let seq = generalized_shift(&generalized_shift(&e, n1), n2);
                    pairs.case(compose_two(&e, n1, n2).same_stream(&seq), || format!("{e}, ({n1}, {n2})"));
                }
            }
            let depth = e.settled_len() + 10;
            let digits = e.materialize(depth);
            for positions in &all {
                let set: BTreeSet<usize> = positions.iter().copied().collect();
                let out = delete_positions(&e, &make_schedule(positions).expect("distinct positions"));
                let ok = out.materialize(depth - positions.len()) == strike(&digits, &set);
                schedules.case(ok, || format!("{e}, positions {positions:?}"));
            }
        }
    }
    let mut example = Tally::new("bar indices of the example order");
    let bars = make_schedule(&EXAMPLE_ORDER).map(|s| s.bars().to_vec());
    example.case(bars.as_deref() == Ok(&[1, 4, 5, 2, 3, 5, 1, 1, 1, 1][..]), || format!("{bars:?}"));
    vec![pairs.finish(), schedules.finish(), example.finish()]
}

/// Configurations used when no function is supplied.
pub fn default_functions() -> Vec<SalemFunction> {
    let order = format!("perm({})", EXAMPLE_ORDER.map(|n| n.to_string()).join(" "));
    [
        "q=2; p=0.3,0.7".to_string(),
        format!("q=2; p=0.3,0.7; seq={order}"),
        format!("q=3; p=1/6,1/2,1/3; seq={order}"),
        "q=3; p=0.6,-0.2,0.6; seq=perm(2 1)".to_string(),
        "q=5; p=0.1,0.3,0.2,0.25,0.15; seq=perm(3 1 2)".to_string(),
    ]
    .iter()
    .map(|s| s.parse().expect("valid built-in spec"))
    .collect()
}

fn equation(fs: &[SalemFunction]) -> Vec<Check> {
    let mut exact = Tally::new("system residual vanishes exactly for k <= 20");
    let mut float = Tally::new("system residual <= 1e-10 at tol 1e-12 for k <= 20");
    for (i, f) in fs.iter().enumerate() {
        for e in corpus(&f.base(), 20, 14, 300 + i as u64) {
            for k in 1..=20 {
                let r = f.residual_exact(&e, k);
                exact.case(matches!(&r, Ok(v) if v.is_zero()), || format!("{f} at {e}, k = {k}: {r:?}"));
                let r = f.residual(&e, k, 1e-12);
                float.case(matches!(r, Ok(v) if v <= 1e-10), || format!("{f} at {e}, k = {k}: {r:?}"));
            }
        }
    }
    vec![exact.finish(), float.finish()]
}

/// q-rational points `Δ_{c_1 … c_m 0 0 …}` with `c_m ≠ 0` for words up to `max_len`.
pub fn q_rational_points(q: u32, max_len: usize, limit: usize) -> Vec<DigitExpansion> {
    let base = BaseSpec::Constant(q);
    let mut out = Vec::new();
    for len in 1..=max_len {
        for c in Cylinder::all_of_rank(&base, len) {
            if out.len() >= limit {
                return out;
            }
            if c.word().last() != Some(&0) {
                out.push(c.inf());
            }
        }
    }
    out
}

fn continuity(fs: &[SalemFunction]) -> Vec<Check> {
    let mut verdicts = Tally::new("continuity verdict agrees with the two dual-form values");
    let mut identity = Tally::new("identity order is continuous at every q-rational point");
    for f in fs {
        for x in q_rational_points(f.q(), 5, 400) {
            let dual = dual_representation(&x).expect("q-rational point");
            let (a, b) = (f.evaluate_exact(&x), f.evaluate_exact(&dual));
            let (Ok(a), Ok(b)) = (a, b) else {
                verdicts.case(false, || format!("{f}: cannot evaluate {x}"));
                continue;
            };
            let verdict = f.continuity_at(&x);
            let ok = match &verdict {
                Ok(Continuity::Continuous) => a == b,
                Ok(Continuity::Jump(j)) => *j == &a - &b,
                Err(_) => false,
            };
            verdicts.case(ok, || format!("{f} at {x}: {verdict:?}, values {a} and {b}"));
            if f.sequence().is_identity() {
                identity.case(verdict == Ok(Continuity::Continuous), || format!("{f} at {x}: {verdict:?}"));
            }
        }
    }
    vec![verdicts.finish(), identity.finish()]
}

/// Midpoint rule for `∫_0^1 g` with `nodes` nodes at `tol`.
pub fn midpoint_integral(f: &SalemFunction, nodes: usize, tol: f64) -> Result<f64> {
    let n = nodes as i64;
    let mut sum = 0.0;
    for i in 0..n {
        sum += f.evaluate_at(&ratio(2 * i + 1, 2 * n), tol)?.value;
    }
    Ok(sum / nodes as f64)
}

/// Trapezoid rule on the rank-`r` grid with exact node values.
pub fn grid_trapezoid(f: &SalemFunction, r: usize) -> Result<Rational> {
    let base = f.base();
    let cells = Cylinder::all_of_rank(&base, r);
    let mut values: Vec<Rational> = cells
        .iter()
        .map(|c| f.evaluate_exact(&c.inf()))
        .collect::<Result<_>>()?;
    values.push(Rational::one());
    let h = Rational::new(BigInt::one(), rational::pow(f.q(), r));
    let two = Rational::from_integer(BigInt::from(2));
    let inner: Rational = values.windows(2).map(|w| (&w[0] + &w[1]) / &two).sum();
    Ok(inner * h)
}

/// One Richardson step on the rank `r - 1` and `r` trapezoid sums.
pub fn richardson_integral(f: &SalemFunction, r: usize) -> Result<Rational> {
    if r == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let q = Rational::from_integer(BigInt::from(f.q()));
    let (coarse, fine) = (grid_trapezoid(f, r - 1)?, grid_trapezoid(f, r)?);
    Ok((&q * fine - coarse) / (q - Rational::one()))
}

fn integral(fs: &[SalemFunction]) -> Vec<Check> {
    let mut quad = Tally::new("closed-form integral vs 10^5-node midpoint rule within 5e-3");
    let mut grid = Tally::new("closed-form integral vs exact grid extrapolation within 1e-8");
    for f in fs {
        let closed = f.integral_closed_form();
        let q = midpoint_integral(f, 100_000, 1e-9);
        let c = rational::to_f64(&closed);
        quad.case(matches!(q, Ok(v) if (v - c).abs() <= 5e-3), || format!("{f}: {closed} vs {q:?}"));
        if f.sequence().is_identity() {
            let r = if f.q() <= 3 { 6 } else { 3 };
            let g = richardson_integral(f, r);
            let ok = matches!(&g, Ok(v) if (rational::to_f64(v) - c).abs() <= 1e-8);
            grid.case(ok, || format!("{f}: {closed} vs {g:?}"));
        }
    }
    vec![quad.finish(), grid.finish()]
}

fn increment(fs: &[SalemFunction]) -> Vec<Check> {
    let mut cyl = Tally::new("identity order: cylinder increment equals the product of weights");
    let mut sets = Tally::new("digit-position sets: increment equals the product of weights");
    for f in fs {
        let max_rank = match f.q() {
            2 => 5,
            3 => 4,
            _ => 3,
        };
        for r in 1..=max_rank {
            for c in Cylinder::all_of_rank(&f.base(), r) {
                let product = f.increment_product(c.word());
                if f.sequence().is_identity() {
                    let inc = f.cylinder_increment(&c);
                    cyl.case(inc.is_ok() && inc == product, || format!("{f} on {:?}: {inc:?} vs {product:?}", c.word()));
                }
                let set = f.set_increment(c.word());
                sets.case(set.is_ok() && set == product, || format!("{f} on {:?}: {set:?} vs {product:?}", c.word()));
            }
        }
    }
    vec![cyl.finish(), sets.finish()]
}

fn measure() -> Vec<Check> {
    let budget = DEFAULT_BRANCH_BUDGET;
    let xs = [ratio(1, 7), ratio(1, 3), ratio(2, 5), Rational::zero(), Rational::one()];
    let mut shifts = Tally::new("lambda{sigma^n(z) < x} = x for q in {2, 3}, n <= 6");
    let mut branches = Tally::new("branch sums agree with streamed cell sums");
    for q in [2u32, 3] {
        for n in 1..=6 {
            let map = DeletionMap::iter_shift(q, n).expect("valid map");
            for x in &xs {
                let m = exact_sublevel(&map, x, budget);
                shifts.case(m.as_ref() == Ok(x), || format!("q = {q}, n = {n}, x = {x}: {m:?}"));
            }
            if n <= 4 {
                let plm = PiecewiseLinearMap::iter_shift(q, n, budget).expect("small map");
                for x in &xs {
                    let (a, b) = (sublevel_measure(&plm, x), exact_sublevel(&map, x, budget));
                    branches.case(b.as_ref() == Ok(&a), || format!("q = {q}, n = {n}, x = {x}"));
                }
            }
        }
    }
    let mut chains = Tally::new("generalized shift chains preserve Lebesgue measure");
    for chain in [vec![1, 5, 7, 3, 6], vec![2, 2, 2], vec![4], vec![3, 1, 2]] {
        for q in [2u32, 3] {
            let map = DeletionMap::chain(q, &chain).expect("valid map");
            for x in &xs {
                let m = exact_sublevel(&map, x, budget);
                chains.case(m.as_ref() == Ok(x), || format!("q = {q}, chain {chain:?}, x = {x}: {m:?}"));
            }
        }
    }
    let mut mc = Tally::new("Monte Carlo comparison within 4 halfwidths of the exact value");
    for (a, b) in [(2, 1), (3, 1), (1, 3)] {
        let (ma, mb) = (DeletionMap::iter_shift(2, a).expect("map"), DeletionMap::iter_shift(2, b).expect("map"));
        let exact = exact_comparison(&ma, &mb, budget);
        let est = monte_carlo_comparison(&ma, &mb, 200_000, 17);
        let ok = match (&exact, &est) {
            (Ok(x), Ok(e)) => (e.estimate - rational::to_f64(x)).abs() <= 4.0 * e.halfwidth.max(1e-12),
            _ => false,
        };
        mc.case(ok, || format!("sigma^{a} vs sigma^{b}: {exact:?} vs {est:?}"));
    }
    vec![shifts.finish(), branches.finish(), chains.finish(), mc.finish()]
}

/// Runs a suite. Function-dependent suites use `spec` when given and the
/// built-in configurations otherwise.
pub fn run_suite(suite: Suite, spec: Option<&SalemFunction>) -> Vec<Check> {
    let fs = match spec {
        Some(f) => vec![f.clone()],
        None => default_functions(),
    };
    match suite {
        Suite::Lemma1 => lemma1(),
        Suite::Operators => operators(),
        Suite::Equation => equation(&fs),
        Suite::Continuity => continuity(&fs),
        Suite::Integral => integral(&fs),
        Suite::Increment => increment(&fs),
        Suite::Measure => measure(),
        Suite::All => [
            Suite::Lemma1,
            Suite::Operators,
            Suite::Equation,
            Suite::Continuity,
            Suite::Integral,
            Suite::Increment,
            Suite::Measure,
        ]
        .into_iter()
        .flat_map(|s| run_suite(s, spec))
        .collect(),
    }
}
