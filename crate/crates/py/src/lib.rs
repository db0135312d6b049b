//! Python module `salem`. Rationals cross the boundary as
//! `fractions.Fraction`; inputs may be `Fraction`, `int`, `str` (`"1/3"`,
//! `"0.25"`) or `float` (converted exactly).

use num_bigint::BigInt;
use pyo3::exceptions::{PyOverflowError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyFloat, PyString};

use salem_core::experiment::{gk_scan, ExperimentConfig, Method};
use salem_core::measure::{exact_comparison, exact_sublevel, DeletionMap};
use salem_core::montecarlo::monte_carlo_sublevel;
use salem_core::plm::DEFAULT_BRANCH_BUDGET;
use salem_core::rational::{self, Rational};
use salem_core::salem::{Continuity, DEFAULT_TOLERANCE};
use salem_core::{shift, Error, Suite};

fn err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded { .. } => PyOverflowError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn fraction<'py>(py: Python<'py>, x: &Rational) -> PyResult<Bound<'py, PyAny>> {
    let cls = py.import("fractions")?.getattr("Fraction")?;
    cls.call1((x.numer().clone(), x.denom().clone()))
}

fn to_rational(x: &Bound<'_, PyAny>) -> PyResult<Rational> {
    if let Ok(s) = x.cast::<PyString>() {
        return rational::parse_rational(s.to_str()?).map_err(err);
    }
    if let Ok(f) = x.cast::<PyFloat>() {
        return rational::from_f64(f.value()).map_err(err);
    }
    let numer: BigInt = x.getattr("numerator")?.extract()?;
    let denom: BigInt = x.getattr("denominator")?.extract()?;
    if denom == BigInt::from(0) {
        return Err(PyValueError::new_err("zero denominator"));
    }
    Ok(Rational::new(numer, denom))
}

/// A digit expansion such as `q3:[1,0,2]:zeros` or `Q(2,3|4):[1]:max`.
#[pyclass(name = "DigitExpansion", frozen, from_py_object)]
#[derive(Clone)]
struct PyExpansion {
    inner: salem_core::DigitExpansion,
}

#[pymethods]
impl PyExpansion {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyExpansion {
            inner: text.parse().map_err(err)?,
        })
    }

    #[getter]
    fn digits(&self) -> Vec<u32> {
        self.inner.digits().to_vec()
    }

    #[getter]
    fn tail(&self) -> String {
        self.inner.tail().to_string()
    }

    fn value<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.value())
    }

    /// The other representation of a q-rational point, if any.
    fn dual(&self) -> Option<PyExpansion> {
        salem_core::dual_representation(&self.inner).map(|inner| PyExpansion { inner })
    }

    fn shift(&self, n: usize) -> PyExpansion {
        PyExpansion {
            inner: shift::shift_n(&self.inner, n),
        }
    }

    fn generalized_shift(&self, m: usize) -> PyExpansion {
        PyExpansion {
            inner: shift::generalized_shift(&self.inner, m),
        }
    }

    /// Deletes the listed original positions through their bar-index schedule.
    fn delete_positions(&self, positions: Vec<usize>) -> PyResult<PyExpansion> {
        let schedule = shift::make_schedule(&positions).map_err(err)?;
        Ok(PyExpansion {
            inner: shift::delete_positions(&self.inner, &schedule),
        })
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("DigitExpansion('{}')", self.inner)
    }

    fn __eq__(&self, other: &PyExpansion) -> bool {
        self.inner == other.inner
    }
}

/// Generalized Salem function from a spec like `q=2; p=0.3,0.7; seq=perm(2 1)`.
#[pyclass(name = "SalemFunction", frozen)]
struct PySalem {
    inner: salem_core::SalemFunction,
}

#[pymethods]
impl PySalem {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PySalem {
            inner: spec.parse().map_err(err)?,
        })
    }

    #[getter]
    fn q(&self) -> u32 {
        self.inner.q()
    }

    #[getter]
    fn weights<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        self.inner.weights().p().iter().map(|p| fraction(py, p)).collect()
    }

    #[getter]
    fn sequence(&self) -> Vec<usize> {
        self.inner.sequence().prefix().to_vec()
    }

    /// `g(x)` as a float; `x` is a number or a `DigitExpansion`.
    #[pyo3(signature = (x, tol = DEFAULT_TOLERANCE))]
    fn __call__(&self, x: &Bound<'_, PyAny>, tol: f64) -> PyResult<f64> {
        Ok(self.evaluate(x, tol)?.0)
    }

    /// `(value, depth, exact)`.
    #[pyo3(signature = (x, tol = DEFAULT_TOLERANCE))]
    fn evaluate(&self, x: &Bound<'_, PyAny>, tol: f64) -> PyResult<(f64, usize, bool)> {
        let ev = if let Ok(e) = x.cast::<PyExpansion>() {
            self.inner.evaluate(&e.get().inner, tol)
        } else {
            self.inner.evaluate_at(&to_rational(x)?, tol)
        }
        .map_err(err)?;
        Ok((ev.value, ev.depth, ev.exact))
    }

    fn evaluate_exact<'py>(&self, py: Python<'py>, e: &PyExpansion) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.evaluate_exact(&e.inner).map_err(err)?)
    }

    /// Defect of the `k`-th functional equation at `e`.
    #[pyo3(signature = (e, k, tol = DEFAULT_TOLERANCE))]
    fn residual(&self, e: &PyExpansion, k: usize, tol: f64) -> PyResult<f64> {
        self.inner.residual(&e.inner, k, tol).map_err(err)
    }

    fn integral<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.integral_closed_form())
    }

    fn increment<'py>(&self, py: Python<'py>, word: Vec<u32>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.inner.increment_product(&word).map_err(err)?)
    }

    fn monotonicity(&self) -> String {
        format!("{:?}", self.inner.classify_monotonicity())
    }

    /// `None` at a continuity point, otherwise the jump as a `Fraction`.
    fn jump<'py>(&self, py: Python<'py>, e: &PyExpansion) -> PyResult<Option<Bound<'py, PyAny>>> {
        match self.inner.continuity_at(&e.inner).map_err(err)? {
            Continuity::Continuous => Ok(None),
            Continuity::Jump(j) => fraction(py, &j).map(Some),
        }
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("SalemFunction('{}')", self.inner)
    }
}

/// Expansion of `x` in base `base` (`"q10"`, `"Q(2,3|4)"`) to `depth` digits,
/// without trailing digits that repeat the tail.
#[pyfunction]
#[pyo3(signature = (x, base, depth, tail = "zeros"))]
fn expansion_of(x: &Bound<'_, PyAny>, base: &str, depth: usize, tail: &str) -> PyResult<PyExpansion> {
    let base = base.parse().map_err(err)?;
    let tail = match tail {
        "zeros" => salem_core::Tail::Zeros,
        "max" => salem_core::Tail::MaxDigits,
        other => return Err(PyValueError::new_err(format!("tail must be zeros or max, got {other:?}"))),
    };
    let inner = salem_core::expansion_of(&to_rational(x)?, &base, depth, tail)
        .map_err(err)?
        .trimmed();
    Ok(PyExpansion { inner })
}

#[pyfunction]
fn make_schedule(positions: Vec<usize>) -> PyResult<Vec<usize>> {
    Ok(shift::make_schedule(&positions).map_err(err)?.bars().to_vec())
}

/// `λ{z : σ_{m_k} ∘ … ∘ σ_{m_1}(z) < x}`; pass `indices=[1]*n` for `σ^n`.
#[pyfunction]
#[pyo3(signature = (q, indices, x, budget = DEFAULT_BRANCH_BUDGET))]
fn sublevel_measure<'py>(
    py: Python<'py>,
    q: u32,
    indices: Vec<usize>,
    x: &Bound<'py, PyAny>,
    budget: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let map = DeletionMap::chain(q, &indices).map_err(err)?;
    fraction(py, &exact_sublevel(&map, &to_rational(x)?, budget).map_err(err)?)
}

/// `λ{z : σ^a(z) < σ^b(z)}`.
#[pyfunction]
#[pyo3(signature = (q, a, b, budget = DEFAULT_BRANCH_BUDGET))]
fn comparison_measure<'py>(py: Python<'py>, q: u32, a: usize, b: usize, budget: usize) -> PyResult<Bound<'py, PyAny>> {
    let (ma, mb) = (
        DeletionMap::iter_shift(q, a).map_err(err)?,
        DeletionMap::iter_shift(q, b).map_err(err)?,
    );
    fraction(py, &exact_comparison(&ma, &mb, budget).map_err(err)?)
}

/// `(estimate, halfwidth)` for `λ{z : σ^n(z) < x}`.
#[pyfunction]
fn monte_carlo(q: u32, n: usize, x: &Bound<'_, PyAny>, samples: u64, seed: u64) -> PyResult<(f64, f64)> {
    let map = DeletionMap::iter_shift(q, n).map_err(err)?;
    let est = monte_carlo_sublevel(&map, &to_rational(x)?, samples, seed).map_err(err)?;
    Ok((est.estimate, est.halfwidth))
}

/// Rows `(family, param, x, measure, method, samples, halfwidth)` for an
/// experiment config given as text.
#[allow(clippy::type_complexity)]
#[pyfunction]
fn measure<'py>(
    py: Python<'py>,
    config: &str,
) -> PyResult<Vec<(String, usize, Option<Bound<'py, PyAny>>, Bound<'py, PyAny>, String, u64, f64)>> {
    let cfg: ExperimentConfig = config.parse().map_err(err)?;
    let out = gk_scan(cfg.scan().map_err(err)?).map_err(err)?;
    out.rows
        .iter()
        .map(|r| {
            let x = r.x.as_ref().map(|x| fraction(py, x)).transpose()?;
            let method = match r.method {
                Method::Exact => "exact",
                Method::MonteCarlo => "montecarlo",
            };
            Ok((
                r.family.to_string(),
                r.param,
                x,
                fraction(py, &r.measure)?,
                method.to_string(),
                r.samples,
                r.halfwidth,
            ))
        })
        .collect()
}

/// `(name, passed, detail)` for every check of a suite.
#[pyfunction]
#[pyo3(signature = (suite, spec = None))]
fn verify(suite: &str, spec: Option<&str>) -> PyResult<Vec<(String, bool, String)>> {
    let suite: Suite = suite.parse().map_err(err)?;
    let f = spec
        .map(str::parse::<salem_core::SalemFunction>)
        .transpose()
        .map_err(err)?;
    Ok(salem_core::run_suite(suite, f.as_ref())
        .into_iter()
        .map(|c| (c.name, c.passed, c.detail))
        .collect())
}

#[pymodule]
fn salem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpansion>()?;
    m.add_class::<PySalem>()?;
    m.add_function(wrap_pyfunction!(expansion_of, m)?)?;
    m.add_function(wrap_pyfunction!(make_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(sublevel_measure, m)?)?;
    m.add_function(wrap_pyfunction!(comparison_measure, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
