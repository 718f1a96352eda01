use std::collections::BTreeMap;
use std::sync::Arc;

use incproc::accessibility;
use incproc::experiment::{run_experiment as run, ExperimentConfig};
use incproc::generator::{self, ExponentialFn, LevelFunction};
use incproc::levy::{self, JumpLaw, LevyModel};
use incproc::monotone::{self, FiniteVariationFn, Jump, Knot, MonotoneFn};
use incproc::stochcalc::{self, IntegratorPath, Polynomial};
use incproc::{Error, StaircaseSpec};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Usage { .. } => PyValueError::new_err(e.to_string()),
        Error::Environment { .. } => PyOSError::new_err(e.to_string()),
        Error::Precondition(_) | Error::Resource { .. } => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Non-decreasing right-continuous function on `[0, horizon]`.
#[pyclass(name = "MonotoneFn", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMonotoneFn(MonotoneFn);

#[pymethods]
impl PyMonotoneFn {
    /// `knots` are `(time, slope)` pairs, `jumps` are `(time, size)` pairs.
    #[new]
    #[pyo3(signature = (origin, knots, jumps, horizon))]
    fn new(origin: f64, knots: Vec<(f64, f64)>, jumps: Vec<(f64, f64)>, horizon: f64) -> PyResult<Self> {
        let knots = knots.into_iter().map(|(time, slope)| Knot { time, slope }).collect();
        let jumps = jumps.into_iter().map(|(time, size)| Jump { time, size }).collect();
        MonotoneFn::new(origin, knots, jumps, horizon).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn step(atoms: Vec<(f64, f64)>, horizon: f64) -> PyResult<Self> {
        MonotoneFn::step(&atoms, horizon).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn identity(horizon: f64) -> PyResult<Self> {
        MonotoneFn::identity(horizon).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        MonotoneFn::from_text(text).map(Self).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    fn jumps(&self) -> Vec<(f64, f64)> {
        self.0.jumps().iter().map(|j| (j.time, j.size)).collect()
    }

    fn value(&self, t: f64) -> f64 {
        self.0.value(t)
    }

    fn left_value(&self, t: f64) -> f64 {
        self.0.left_value(t)
    }

    fn left_inverse(&self, x: f64) -> f64 {
        self.0.left_inverse(x)
    }

    fn last_passage(&self, x: f64) -> f64 {
        self.0.last_passage(x)
    }

    fn is_pure_step(&self) -> bool {
        self.0.is_pure_step()
    }

    /// `(range_measure, pure_jump)` over `[0, t]`.
    fn range_report(&self, t: f64) -> PyResult<(f64, bool)> {
        let r = self.0.range_report(t).map_err(py_err)?;
        Ok((r.range_measure, r.pure_jump))
    }

    fn extended(&self, horizon: f64) -> Self {
        Self(self.0.extended(horizon))
    }

    fn __call__(&self, t: f64) -> f64 {
        self.0.value(t)
    }

    fn __repr__(&self) -> String {
        format!(
            "MonotoneFn(horizon={}, knots={}, jumps={})",
            self.0.horizon(),
            self.0.knots().len(),
            self.0.jumps().len()
        )
    }
}

#[pyclass(name = "LevyModel", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyLevyModel(LevyModel);

#[pymethods]
impl PyLevyModel {
    #[staticmethod]
    fn stable(alpha: f64) -> PyResult<Self> {
        LevyModel::stable(alpha).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn gamma(shape: f64, rate: f64) -> PyResult<Self> {
        LevyModel::gamma(shape, rate).map(Self).map_err(py_err)
    }

    /// Jumps of size `constant` at rate `rate`.
    #[staticmethod]
    fn compound_poisson_constant(rate: f64, constant: f64) -> PyResult<Self> {
        LevyModel::compound_poisson(rate, JumpLaw::Constant(constant)).map(Self).map_err(py_err)
    }

    /// Exponential jump sizes with rate `jump_rate`.
    #[staticmethod]
    fn compound_poisson_exponential(rate: f64, jump_rate: f64) -> PyResult<Self> {
        LevyModel::compound_poisson(rate, JumpLaw::Exponential { rate: jump_rate })
            .map(Self)
            .map_err(py_err)
    }

    fn tail(&self, y: f64) -> PyResult<f64> {
        self.0.tail(y).map_err(py_err)
    }

    fn laplace_exponent(&self, lam: f64) -> PyResult<f64> {
        self.0.laplace_exponent(lam).map_err(py_err)
    }

    /// `(value, error)` of the exponent with jumps `<= eps` removed.
    fn truncated_laplace_exponent(&self, lam: f64, eps: f64) -> PyResult<(f64, f64)> {
        let q = self.0.truncated_laplace_exponent(lam, eps).map_err(py_err)?;
        Ok((q.value, q.error))
    }

    fn small_jump_bias(&self, horizon: f64, eps: f64) -> PyResult<f64> {
        self.0.small_jump_bias(horizon, eps).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        self.0.to_string()
    }
}

/// `(times, sizes)` of the jumps larger than `eps` on `(0, horizon]`.
#[pyfunction]
fn simulate_path(model: &PyLevyModel, horizon: f64, eps: f64, seed: u64, stream: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let p = levy::simulate_path(&model.0, horizon, eps, seed, stream).map_err(py_err)?;
    Ok((p.times, p.sizes))
}

/// The path as a step function.
#[pyfunction]
fn simulate_monotone(model: &PyLevyModel, horizon: f64, eps: f64, seed: u64, stream: u64) -> PyResult<PyMonotoneFn> {
    let p = levy::simulate_path(&model.0, horizon, eps, seed, stream).map_err(py_err)?;
    Ok(PyMonotoneFn(p.to_monotone()))
}

#[pyfunction]
fn cov_residual(f: &PyMonotoneFn, a: &PyMonotoneFn, t: f64) -> PyResult<BTreeMap<&'static str, f64>> {
    let r = monotone::cov_residual(&f.0, &a.0, t).map_err(py_err)?;
    Ok(BTreeMap::from([
        ("lhs", r.lhs),
        ("jump_sum", r.jump_sum),
        ("deficit", r.deficit),
        ("jump_sum_at_path_jumps", r.jump_sum_at_path_jumps),
        ("deficit_at_path_jumps", r.deficit_at_path_jumps),
    ]))
}

#[pyfunction]
fn is_left_accessible(a: &PyMonotoneFn, x: f64, tol: f64) -> PyResult<bool> {
    accessibility::is_left_accessible(&a.0, x, tol).map_err(py_err)
}

#[pyfunction]
fn accessible_mass(f: &PyMonotoneFn, a: &PyMonotoneFn, tol: f64) -> PyResult<f64> {
    accessibility::accessible_mass(&f.0, &a.0, tol).map_err(py_err)
}

/// `(lo, hi)` enclosing the staircase at `t`, from `n` atoms.
#[pyfunction]
#[pyo3(signature = (t, n, horizon = 2.0))]
fn staircase_eval(t: f64, n: usize, horizon: f64) -> PyResult<(f64, f64)> {
    let e = StaircaseSpec::new(horizon)
        .and_then(|s| s.certified_eval(t, n))
        .map_err(py_err)?;
    Ok((e.lo, e.hi))
}

/// `(lo, hi)` enclosing the left inverse of the staircase at `x`.
#[pyfunction]
#[pyo3(signature = (x, delta = 1e-8, horizon = 2.0))]
fn staircase_inverse(x: f64, delta: f64, horizon: f64) -> PyResult<(f64, f64)> {
    let e = StaircaseSpec::new(horizon)
        .and_then(|s| s.certified_inverse(x, delta))
        .map_err(py_err)?;
    Ok((e.lo, e.hi))
}

/// Rows `(n, lhs, jump_sum, deficit)`, each quantity a `(lo, hi)` pair.
#[pyfunction]
#[pyo3(signature = (t, ns, delta = 1e-8, horizon = 2.0))]
#[allow(clippy::type_complexity)]
fn staircase_deficit(t: f64, ns: Vec<usize>, delta: f64, horizon: f64) -> PyResult<Vec<(usize, (f64, f64), (f64, f64), (f64, f64))>> {
    let rows = StaircaseSpec::new(horizon)
        .and_then(|s| s.deficit_experiment(t, &ns, delta))
        .map_err(py_err)?;
    Ok(rows
        .into_iter()
        .map(|r| {
            (
                r.n,
                (r.lhs.lo, r.lhs.hi),
                (r.jump_sum.lo, r.jump_sum.hi),
                (r.deficit.lo, r.deficit.hi),
            )
        })
        .collect())
}

#[pyfunction]
fn extended_generator(model: &PyLevyModel, f: &PyMonotoneFn, x: f64) -> PyResult<f64> {
    Ok(generator::extended_generator(&model.0, &f.0, x).map_err(py_err)?.value)
}

/// `G f(x)` for `f(z) = constant + scale·e^{-rate z}`.
#[pyfunction]
fn exponential_generator(model: &PyLevyModel, constant: f64, scale: f64, rate: f64, x: f64) -> PyResult<f64> {
    let g = ExponentialFn::new(constant, scale, rate).map_err(py_err)?;
    Ok(generator::classical_generator(&model.0, &g, x).map_err(py_err)?.value)
}

/// Martingale check for `f`, either a `MonotoneFn` or coefficients
/// `(constant, scale, rate)` of an exponential. Returns the report as a
/// dict of strings.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn martingale_test(
    model: &PyLevyModel,
    f: &Bound<'_, PyAny>,
    x: f64,
    t: f64,
    n_paths: u64,
    eps: f64,
    seed: u64,
) -> PyResult<BTreeMap<String, String>> {
    let f: Box<dyn LevelFunction> = if let Ok(m) = f.cast::<PyMonotoneFn>() {
        Box::new(m.get().0.clone())
    } else {
        let (c, s, r): (f64, f64, f64) = f.extract()?;
        Box::new(ExponentialFn::new(c, s, r).map_err(py_err)?)
    };
    let report = generator::martingale_test(&model.0, f.as_ref(), x, t, n_paths, eps, seed).map_err(py_err)?;
    Ok(report
        .to_text()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

/// `(residual, budget)` of the integration by parts identity. `x` is a
/// `MonotoneFn` path or `None` for `s ↦ s`; `k = k_pos - k_neg`.
#[pyfunction]
#[pyo3(signature = (x, a, k_pos, t, k_neg = None))]
fn ibp_residual(
    x: Option<&PyMonotoneFn>,
    a: &PyMonotoneFn,
    k_pos: &PyMonotoneFn,
    t: f64,
    k_neg: Option<&PyMonotoneFn>,
) -> PyResult<(f64, f64)> {
    let x = match x {
        Some(p) => IntegratorPath::FiniteVariation(FiniteVariationFn::from_monotone(p.0.clone())),
        None => IntegratorPath::Smooth {
            path: Arc::new(Polynomial::identity()),
            horizon: t,
        },
    };
    let neg = match k_neg {
        Some(n) => n.0.clone(),
        None => MonotoneFn::zero(k_pos.0.horizon()).map_err(py_err)?,
    };
    let k = FiniteVariationFn::new(k_pos.0.clone(), neg).map_err(py_err)?;
    let r = stochcalc::ibp_residual(&x, &a.0, &k, t).map_err(py_err)?;
    Ok((r.residual, r.budget))
}

/// Runs a `key=value` experiment configuration and returns
/// `(passed, summary, files)`; nothing is written to disk.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn run_experiment(config: &str) -> PyResult<(bool, BTreeMap<String, String>, BTreeMap<String, String>)> {
    let c = ExperimentConfig::from_text(config).map_err(py_err)?;
    let r = run(&c).map_err(py_err)?;
    Ok((r.pass, r.summary.into_iter().collect(), r.files.into_iter().collect()))
}

#[pymodule]
fn pyincproc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMonotoneFn>()?;
    m.add_class::<PyLevyModel>()?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_monotone, m)?)?;
    m.add_function(wrap_pyfunction!(cov_residual, m)?)?;
    m.add_function(wrap_pyfunction!(is_left_accessible, m)?)?;
    m.add_function(wrap_pyfunction!(accessible_mass, m)?)?;
    m.add_function(wrap_pyfunction!(staircase_eval, m)?)?;
    m.add_function(wrap_pyfunction!(staircase_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(staircase_deficit, m)?)?;
    m.add_function(wrap_pyfunction!(extended_generator, m)?)?;
    m.add_function(wrap_pyfunction!(exponential_generator, m)?)?;
    m.add_function(wrap_pyfunction!(martingale_test, m)?)?;
    m.add_function(wrap_pyfunction!(ibp_residual, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
