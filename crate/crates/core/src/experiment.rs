//! Tables of Gauss–Kuzmin type measures and the experiment config format.
//!
//! A scan walks a family of shift compositions over a parameter list and a
//! grid of thresholds `x`, reporting `λ{z : map(z) < x}` (or
//! `λ{z : σ^a(z) < σ^b(z)}` for the comparison family) exactly while the
//! branch budget allows and by Monte Carlo beyond it when fallback is on.
//! Only finite tables are produced.

use std::fmt;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::{exact_comparison, exact_sublevel, fraction_parts, required_cells, shifted_threshold, DeletionMap};
use crate::montecarlo::{monte_carlo_comparison, monte_carlo_sublevel};
use crate::plm::DEFAULT_BRANCH_BUDGET;
use crate::rational::{self, parse_rational, Rational};
use crate::salem::{SalemFunction, DEFAULT_TOLERANCE};

pub const CSV_HEADER: &str = "family,param,x_num,x_den,measure_num,measure_den,method,samples,halfwidth";
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x5EED;
/// Longest lookup table accepted for `ScheduleChain`.
pub const MAX_TABLE: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// `σ^n`, parameter `n`.
    IterShift,
    /// `σ_m ∘ … ∘ σ_m` (`k` factors), parameter `k`.
    GenShiftChain { m: usize },
    /// `σ_{ψ(k)} ∘ … ∘ σ_{ψ(1)}`, parameter `k`.
    ScheduleChain { table: Vec<usize> },
    /// `σ^a` against `σ^b` at the same point, parameter `a`.
    CompareIter { b: usize },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::IterShift => "IterShift",
            Family::GenShiftChain { .. } => "GenShiftChain",
            Family::ScheduleChain { .. } => "ScheduleChain",
            Family::CompareIter { .. } => "CompareIter",
        }
    }

    /// The map for one parameter value, and the right-hand map for the
    /// comparison family.
    pub fn maps(&self, q: u32, param: usize) -> Result<(DeletionMap, Option<DeletionMap>)> {
        Ok(match self {
            Family::IterShift => (DeletionMap::iter_shift(q, param)?, None),
            Family::GenShiftChain { m } => (DeletionMap::chain(q, &vec![*m; param])?, None),
            Family::ScheduleChain { table } => {
                let prefix = table.get(..param).ok_or_else(|| {
                    Error::InvalidArgument(format!("count {param} exceeds the psi table of {} entries", table.len()))
                })?;
                (DeletionMap::chain(q, prefix)?, None)
            }
            Family::CompareIter { b } => (DeletionMap::iter_shift(q, param)?, Some(DeletionMap::iter_shift(q, *b)?)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "montecarlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub q: u32,
    pub family: Family,
    pub params: Vec<usize>,
    pub xs: Vec<Rational>,
    /// Measure against `σ^{k_0}(x)` instead of `x`.
    pub threshold_shift: Option<usize>,
    pub budget: usize,
    pub fallback: bool,
    pub samples: u64,
    pub seed: u64,
}

impl Scan {
    pub fn new(q: u32, family: Family, params: Vec<usize>, xs: Vec<Rational>) -> Self {
        Scan {
            q,
            family,
            params,
            xs,
            threshold_shift: None,
            budget: DEFAULT_BRANCH_BUDGET,
            fallback: false,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub family: &'static str,
    pub param: usize,
    pub x: Option<Rational>,
    /// Exact value, or `hits / samples` for Monte Carlo rows.
    pub measure: Rational,
    pub method: Method,
    pub samples: u64,
    pub halfwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanOutput {
    pub rows: Vec<Row>,
    /// Budget and fallback decisions, meant for stderr.
    pub notes: Vec<String>,
}

pub fn gk_scan(scan: &Scan) -> Result<ScanOutput> {
    if let Some(x) = scan.xs.iter().find(|x| !rational::is_unit(x)) {
        return Err(Error::OutOfUnitInterval(x.to_string()));
    }
    let mut out = ScanOutput::default();
    let compare = matches!(scan.family, Family::CompareIter { .. });
    for &param in &scan.params {
        let (map, other) = scan.family.maps(scan.q, param)?;
        let mut maps = vec![&map];
        maps.extend(other.as_ref());
        let needed = required_cells(&maps);
        let exact = num_traits::ToPrimitive::to_usize(&needed).is_some_and(|n| n <= scan.budget);
        if !exact {
            if !scan.fallback {
                return Err(Error::BudgetExceeded {
                    needed: needed.to_string(),
                    budget: scan.budget,
                });
            }
            out.notes.push(format!(
                "{} param {param}: {needed} branches exceed budget {}, using Monte Carlo with {} samples",
                scan.family.name(),
                scan.budget,
                scan.samples
            ));
        }
        let seed_for = |row: usize| scan.seed.wrapping_add(row as u64);
        if compare {
            let other = other.as_ref().expect("comparison family has two maps");
            let row = if exact {
                exact_row(scan, param, None, exact_comparison(&map, other, scan.budget)?)
            } else {
                let est = monte_carlo_comparison(&map, other, scan.samples, seed_for(out.rows.len()))?;
                mc_row(scan, param, None, est)
            };
            out.rows.push(row);
            continue;
        }
        for x in &scan.xs {
            let threshold = match scan.threshold_shift {
                Some(k0) => shifted_threshold(x, scan.q, k0)?,
                None => x.clone(),
            };
            let row = if exact {
                exact_row(scan, param, Some(x.clone()), exact_sublevel(&map, &threshold, scan.budget)?)
            } else {
                let est = monte_carlo_sublevel(&map, &threshold, scan.samples, seed_for(out.rows.len()))?;
                if est.indeterminate > 0 {
                    out.notes.push(format!(
                        "{} param {param} x {x}: {} indeterminate samples scored as misses",
                        scan.family.name(),
                        est.indeterminate
                    ));
                }
                mc_row(scan, param, Some(x.clone()), est)
            };
            out.rows.push(row);
        }
    }
    if let Some(k0) = scan.threshold_shift {
        out.notes.push(format!("thresholds are sigma^{k0}(x); the x columns hold x"));
    }
    Ok(out)
}

fn exact_row(scan: &Scan, param: usize, x: Option<Rational>, measure: Rational) -> Row {
    Row {
        family: scan.family.name(),
        param,
        x,
        measure,
        method: Method::Exact,
        samples: 0,
        halfwidth: 0.0,
    }
}

fn mc_row(scan: &Scan, param: usize, x: Option<Rational>, est: crate::montecarlo::McEstimate) -> Row {
    Row {
        family: scan.family.name(),
        param,
        x,
        measure: Rational::new(est.hits.into(), est.samples.into()),
        method: Method::MonteCarlo,
        samples: est.samples,
        halfwidth: est.halfwidth,
    }
}

pub fn write_csv<W: Write>(rows: &[Row], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let (x_num, x_den) = match &r.x {
            Some(x) => {
                let (n, d) = fraction_parts(x);
                (n.to_string(), d.to_string())
            }
            None => (String::new(), String::new()),
        };
        let (m_num, m_den) = fraction_parts(&r.measure);
        let halfwidth = if r.method == Method::Exact {
            "0".to_string()
        } else {
            format!("{:.6e}", r.halfwidth)
        };
        writeln!(
            w,
            "{},{},{x_num},{x_den},{m_num},{m_den},{},{},{halfwidth}",
            r.family, r.param, r.method, r.samples
        )?;
    }
    Ok(())
}

/// Parsed `key = value` experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub function: Option<SalemFunction>,
    pub tol: f64,
    pub grid: usize,
    pub scan: Option<Scan>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn scan(&self) -> Result<&Scan> {
        self.scan
            .as_ref()
            .ok_or_else(|| Error::Parse("config has no family".into()))
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("bad value {value:?} for {key}")))
}

/// `1..5` (inclusive) or `1, 2, 7`.
pub fn parse_index_list(value: &str) -> Result<Vec<usize>> {
    let value = value.trim();
    if let Some((a, b)) = value.split_once("..") {
        let a: usize = parse_num("range start", a.trim())?;
        let b: usize = parse_num("range end", b.trim().trim_start_matches('='))?;
        return Ok((a..=b).collect());
    }
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_num("index", t))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("bad value {value:?} for {key}"))),
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut function = None;
        let mut tol = DEFAULT_TOLERANCE;
        let mut grid = 100;
        let mut family_name: Option<String> = None;
        let mut q: Option<u32> = None;
        let mut params = None;
        let mut xs = Vec::new();
        let (mut m, mut psi, mut b, mut k0) = (None, None, None, None);
        let mut budget = DEFAULT_BRANCH_BUDGET;
        let mut fallback = false;
        let mut samples = DEFAULT_SAMPLES;
        let mut seed = DEFAULT_SEED;
        let mut out = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "function" => function = Some(value.parse::<SalemFunction>()?),
                "tol" => tol = parse_num(key, value)?,
                "grid" => grid = parse_num(key, value)?,
                "family" => family_name = Some(value.to_string()),
                "q" => q = Some(parse_num(key, value)?),
                "n" => params = Some(parse_index_list(value)?),
                "x" => {
                    xs = value
                        .split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(parse_rational)
                        .collect::<Result<_>>()?
                }
                "m" => m = Some(parse_num::<usize>(key, value)?),
                "psi" => psi = Some(parse_index_list(value)?),
                "b" => b = Some(parse_num::<usize>(key, value)?),
                "k0" => k0 = Some(parse_num::<usize>(key, value)?),
                "budget" => budget = parse_num(key, value)?,
                "fallback" => fallback = parse_bool(key, value)?,
                "samples" => samples = parse_num(key, value)?,
                "seed" => seed = parse_num(key, value)?,
                "out" => out = Some(PathBuf::from(value)),
                other => return Err(Error::Parse(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }

        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidTolerance(tol));
        }
        if grid < 2 {
            return Err(Error::Parse(format!("grid = {grid} must be at least 2")));
        }
        if samples == 0 {
            return Err(Error::Parse("samples must be at least 1".into()));
        }
        let scan = match family_name {
            None => None,
            Some(name) => {
                let need = |v: Option<usize>, key: &str| {
                    v.ok_or_else(|| Error::Parse(format!("family {name} needs {key} = ...")))
                };
                let family = match name.as_str() {
                    "IterShift" => Family::IterShift,
                    "GenShiftChain" => Family::GenShiftChain { m: need(m, "m")? },
                    "ScheduleChain" => {
                        let table = psi.ok_or_else(|| Error::Parse("family ScheduleChain needs psi = ...".into()))?;
                        if table.len() > MAX_TABLE {
                            return Err(Error::Parse(format!("psi has more than {MAX_TABLE} entries")));
                        }
                        Family::ScheduleChain { table }
                    }
                    "CompareIter" => Family::CompareIter { b: need(b, "b")? },
                    other => return Err(Error::Parse(format!("unknown family {other:?}"))),
                };
                let q = q
                    .or_else(|| function.as_ref().map(SalemFunction::q))
                    .ok_or_else(|| Error::Parse("missing q".into()))?;
                if q < 2 {
                    return Err(Error::Parse(format!("q = {q} must be at least 2")));
                }
                if let Some(x) = xs.iter().find(|x| !rational::is_unit(x)) {
                    return Err(Error::Parse(format!("x = {x} is outside [0, 1]")));
                }
                let params = params.ok_or_else(|| Error::Parse("missing n = ...".into()))?;
                if let Family::ScheduleChain { table } = &family {
                    if let Some(k) = params.iter().find(|&&k| k > table.len()) {
                        return Err(Error::Parse(format!("count {k} exceeds the psi table")));
                    }
                }
                Some(Scan {
                    q,
                    family,
                    params,
                    xs,
                    threshold_shift: k0,
                    budget,
                    fallback,
                    samples,
                    seed,
                })
            }
        };
        Ok(ExperimentConfig {
            function,
            tol,
            grid,
            scan,
            out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn iter_shift_column() {
        let scan = Scan::new(2, Family::IterShift, (1..=5).collect(), vec![ratio(1, 3)]);
        let out = gk_scan(&scan).unwrap();
        assert_eq!(out.rows.len(), 5);
        assert!(out.rows.iter().all(|r| r.measure == ratio(1, 3) && r.method == Method::Exact));
    }

    #[test]
    fn constant_chain_counts() {
        let scan = Scan::new(3, Family::GenShiftChain { m: 2 }, (1..=4).collect(), vec![ratio(1, 4), ratio(5, 9)]);
        let out = gk_scan(&scan).unwrap();
        assert_eq!(out.rows.len(), 8);
        for r in &out.rows {
            assert_eq!(&r.measure, r.x.as_ref().unwrap());
        }
    }

    #[test]
    fn empty_grid_gives_empty_table() {
        let scan = Scan::new(2, Family::IterShift, vec![1, 2], vec![]);
        assert!(gk_scan(&scan).unwrap().rows.is_empty());
    }

    #[test]
    fn comparison_rows() {
        let scan = Scan::new(2, Family::CompareIter { b: 1 }, vec![2], vec![ratio(1, 3)]);
        let out = gk_scan(&scan).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(out.rows[0].measure, ratio(1, 2));
        assert_eq!(out.rows[0].x, None);
        let mut buf = Vec::new();
        write_csv(&out.rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\nCompareIter,2,,,1,2,exact,0,0\n"));
    }

    #[test]
    fn budget_and_fallback() {
        let mut scan = Scan::new(2, Family::IterShift, vec![12], vec![ratio(1, 3)]);
        scan.budget = 1000;
        assert!(matches!(gk_scan(&scan), Err(Error::BudgetExceeded { .. })));
        scan.fallback = true;
        scan.samples = 100_000;
        let out = gk_scan(&scan).unwrap();
        let row = &out.rows[0];
        assert_eq!(row.method, Method::MonteCarlo);
        assert!((rational::to_f64(&row.measure) - 1.0 / 3.0).abs() <= 4.0 * row.halfwidth);
        assert_eq!(out.notes.len(), 1);
        assert_eq!(gk_scan(&scan).unwrap(), out);
    }

    #[test]
    fn shifted_thresholds() {
        let mut scan = Scan::new(10, Family::IterShift, vec![1], vec![ratio(1234, 10000)]);
        scan.threshold_shift = Some(1);
        let out = gk_scan(&scan).unwrap();
        assert_eq!(out.rows[0].measure, ratio(234, 1000));
        assert_eq!(out.rows[0].x, Some(ratio(1234, 10000)));
    }

    #[test]
    fn config_parsing() {
        let text = "\
# scan
function = q=2; p=0.3,0.7
tol = 1e-10
grid = 8
family = ScheduleChain
psi = 1, 5, 7, 3, 6
n = 0..3
x = 1/3, 0.25
budget = 5000
fallback = yes
seed = 11
out = table.csv
";
        let c: ExperimentConfig = text.parse().unwrap();
        assert_eq!(c.grid, 8);
        assert_eq!(c.tol, 1e-10);
        let scan = c.scan().unwrap();
        assert_eq!(scan.q, 2);
        assert_eq!(scan.params, vec![0, 1, 2, 3]);
        assert_eq!(scan.xs, vec![ratio(1, 3), ratio(1, 4)]);
        assert_eq!(scan.family, Family::ScheduleChain { table: vec![1, 5, 7, 3, 6] });
        assert!(scan.fallback);
        assert_eq!(c.out, Some(PathBuf::from("table.csv")));
        let rows = gk_scan(scan).unwrap().rows;
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].measure, ratio(1, 3));
        assert_eq!(rows[7].measure, ratio(1, 4));
    }

    #[test]
    fn config_errors() {
        for bad in [
            "family = Nope\nq = 2\nn = 1",
            "family = IterShift\nn = 1",
            "family = IterShift\nq = 2",
            "family = GenShiftChain\nq = 2\nn = 1",
            "grid = 1",
            "tol = 0",
            "nonsense",
            "colour = blue",
            "function = q=2; p=0.3,0.6",
            "family = IterShift\nq = 2\nn = 1\nx = 3/2",
            "family = ScheduleChain\nq = 2\npsi = 1,2\nn = 3",
        ] {
            assert!(bad.parse::<ExperimentConfig>().is_err(), "{bad:?}");
        }
        let c: ExperimentConfig = "tol = 1e-9".parse().unwrap();
        assert!(c.scan().is_err());
        assert_eq!(parse_index_list("2..=4").unwrap(), vec![2, 3, 4]);
    }
}
