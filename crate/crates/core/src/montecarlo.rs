//! Monte Carlo estimates of the same measures, for cross-checking.
//!
//! A uniform `z` is drawn digit by digit and only as far as the comparison
//! needs. Samples that still tie after [`MAX_DEPTH`] image digits are
//! counted as indeterminate and scored as misses.
//!
//! Samples are split into fixed chunks; chunk `c` draws from the ChaCha8
//! stream `c` of the seed, so results do not depend on the thread count.

use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expansion::{greedy_digits, BaseSpec};
use crate::measure::DeletionMap;
use crate::rational::Rational;

pub const MAX_DEPTH: usize = 256;
pub const Z_99: f64 = 2.5758293035489;
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub hits: u64,
    pub samples: u64,
    pub indeterminate: u64,
    pub estimate: f64,
    /// 99% normal-approximation halfwidth.
    pub halfwidth: f64,
}

impl McEstimate {
    fn from_counts(hits: u64, samples: u64, indeterminate: u64) -> Self {
        let p = hits as f64 / samples as f64;
        McEstimate {
            hits,
            samples,
            indeterminate,
            estimate: p,
            halfwidth: Z_99 * (p * (1.0 - p) / samples as f64).sqrt(),
        }
    }
}

#[derive(Clone, Copy)]
enum Outcome {
    Hit,
    Miss,
    Tie,
}

/// Lazily drawn digits of one sample.
struct LazyDigits<'r> {
    q: u32,
    rng: &'r mut ChaCha8Rng,
    digits: Vec<u32>,
}

impl LazyDigits<'_> {
    fn at(&mut self, position: usize) -> u32 {
        while self.digits.len() < position {
            self.digits.push(self.rng.random_range(0..self.q));
        }
        self.digits[position - 1]
    }
}

fn run<F>(q: u32, samples: u64, seed: u64, trial: F) -> Result<McEstimate>
where
    F: Fn(&mut LazyDigits) -> Outcome + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let (hits, ties) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut counts = (0u64, 0u64);
            for _ in 0..n {
                let mut z = LazyDigits {
                    q,
                    rng: &mut rng,
                    digits: Vec::new(),
                };
                match trial(&mut z) {
                    Outcome::Hit => counts.0 += 1,
                    Outcome::Tie => counts.1 += 1,
                    Outcome::Miss => {}
                }
            }
            counts
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(McEstimate::from_counts(hits, samples, ties))
}

/// Estimate of `λ{z : map(z) < x}`.
pub fn monte_carlo_sublevel(map: &DeletionMap, x: &Rational, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if !x.is_positive() {
        return Ok(McEstimate::from_counts(0, samples, 0));
    }
    if x >= &Rational::one() {
        return Ok(McEstimate::from_counts(samples, samples, 0));
    }
    let (threshold, _) = greedy_digits(x, &BaseSpec::constant(map.q())?, MAX_DEPTH);
    let sources = map.source_positions(MAX_DEPTH);
    run(map.q(), samples, seed, |z| {
        for (&t, &p) in threshold.iter().zip(&sources) {
            let d = z.at(p);
            if d != t {
                return if d < t { Outcome::Hit } else { Outcome::Miss };
            }
        }
        Outcome::Tie
    })
}

/// Estimate of `λ{z : a(z) < b(z)}`.
pub fn monte_carlo_comparison(a: &DeletionMap, b: &DeletionMap, samples: u64, seed: u64) -> Result<McEstimate> {
    if a.q() != b.q() {
        return Err(Error::Inconsistent(format!("bases {} and {} differ", a.q(), b.q())));
    }
    let (sa, sb) = (a.source_positions(MAX_DEPTH), b.source_positions(MAX_DEPTH));
    run(a.q(), samples, seed, |z| {
        for (&pa, &pb) in sa.iter().zip(&sb) {
            let (da, db) = (z.at(pa), z.at(pb));
            if da != db {
                return if da < db { Outcome::Hit } else { Outcome::Miss };
            }
        }
        Outcome::Tie
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio, to_f64};

    #[test]
    fn trivial_thresholds() {
        let m = DeletionMap::iter_shift(2, 1).unwrap();
        assert_eq!(monte_carlo_sublevel(&m, &int(0), 100, 1).unwrap().hits, 0);
        let all = monte_carlo_sublevel(&m, &int(1), 100, 1).unwrap();
        assert_eq!((all.hits, all.estimate, all.halfwidth), (100, 1.0, 0.0));
        assert!(monte_carlo_sublevel(&m, &ratio(1, 2), 0, 1).is_err());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let m = DeletionMap::chain(3, &[2, 5]).unwrap();
        let a = monte_carlo_sublevel(&m, &ratio(2, 7), 50_000, 9).unwrap();
        let b = monte_carlo_sublevel(&m, &ratio(2, 7), 50_000, 9).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_sublevel(&m, &ratio(2, 7), 50_000, 10).unwrap();
        assert_ne!(a.hits, c.hits);
    }

    #[test]
    fn doubling_map_half() {
        let m = DeletionMap::iter_shift(2, 1).unwrap();
        let est = monte_carlo_sublevel(&m, &ratio(1, 2), 1_000_000, 7).unwrap();
        assert!((est.halfwidth - 0.0013).abs() < 1e-4);
        assert!((est.estimate - 0.5).abs() <= 4.0 * est.halfwidth);
        assert_eq!(est.indeterminate, 0);
    }

    #[test]
    fn comparison_against_exact() {
        let s1 = DeletionMap::iter_shift(2, 1).unwrap();
        let s2 = DeletionMap::iter_shift(2, 2).unwrap();
        let exact = crate::measure::exact_comparison(&s2, &s1, 1 << 20).unwrap();
        let est = monte_carlo_comparison(&s2, &s1, 1_000_000, 3).unwrap();
        assert!((est.estimate - to_f64(&exact)).abs() <= 4.0 * est.halfwidth);
    }
}
