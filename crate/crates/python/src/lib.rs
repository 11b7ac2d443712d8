//! Python bindings: build a problem from preset strings, solve it, inspect the
//! trajectory and its identity residuals, and run the inequality checks.

use halfline_nls::cli::config::build_initial;
use halfline_nls::field::{h1_norm, l2_norm, ComplexField, Grid};
use halfline_nls::identities::{identity_residuals, IdentityReport, PotentialTerm};
use halfline_nls::inequalities::{check_gn, gn_parameters};
use halfline_nls::lift::ForcePreset;
use halfline_nls::nonlinearity::NonlinearityPreset;
use halfline_nls::potential::PotentialPreset;
use halfline_nls::solver::{oracle_solve, solve, Problem as CoreProblem, SolverConfig, Trajectory as CoreTrajectory};
use halfline_nls::{Complex64, Error};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Problem", module = "halfline_nls")]
struct PyProblem {
    inner: CoreProblem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (length, interior, potential="zero", nonlinearity="zero", force="zero", initial="zero", delta=None))]
    fn new(
        length: f64,
        interior: usize,
        potential: &str,
        nonlinearity: &str,
        force: &str,
        initial: &str,
        delta: Option<f64>,
    ) -> PyResult<Self> {
        let build = || -> halfline_nls::Result<CoreProblem> {
            let grid = Grid::new(length, interior)?;
            let pot = PotentialPreset::parse(potential)?.build(grid)?;
            let nl = NonlinearityPreset::parse(nonlinearity)?.build()?;
            let f = ForcePreset::parse(force)?.build()?;
            let phi = build_initial(initial, grid, &pot, &f, delta)?;
            let p = CoreProblem::new(pot, nl, f, phi)?;
            Ok(match delta {
                Some(d) => p.with_delta(d),
                None => p,
            })
        };
        build().map(|inner| Self { inner }).map_err(py_err)
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.grid.nodes()
    }

    #[getter]
    fn initial(&self) -> Vec<Complex64> {
        self.inner.initial.values().to_vec()
    }

    /// Picard–Duhamel solve; keyword arguments are solver settings.
    #[pyo3(signature = (**settings))]
    fn solve(&self, settings: Option<&Bound<'_, PyDict>>) -> PyResult<PyTrajectory> {
        let cfg = solver_config(settings)?;
        let traj = solve(&self.inner, &cfg).map_err(py_err)?;
        Ok(PyTrajectory {
            inner: traj,
            problem: self.inner.clone(),
        })
    }

    /// Crank–Nicolson reference solve with step `dt`.
    #[pyo3(signature = (dt, **settings))]
    fn oracle(&self, dt: f64, settings: Option<&Bound<'_, PyDict>>) -> PyResult<PyTrajectory> {
        let cfg = solver_config(settings)?;
        let traj = oracle_solve(&self.inner, dt, &cfg).map_err(py_err)?;
        Ok(PyTrajectory {
            inner: traj,
            problem: self.inner.clone(),
        })
    }
}

fn solver_config(settings: Option<&Bound<'_, PyDict>>) -> PyResult<SolverConfig> {
    let mut cfg = SolverConfig::default();
    let Some(d) = settings else {
        return Ok(cfg);
    };
    for (k, v) in d.iter() {
        let key: String = k.extract()?;
        match key.as_str() {
            "final_time" => cfg.final_time = v.extract()?,
            "window" => cfg.window = v.extract()?,
            "picard_tol" => cfg.picard_tol = v.extract()?,
            "picard_max_iter" => cfg.picard_max_iter = v.extract()?,
            "quad_nodes" => cfg.quad_nodes = v.extract()?,
            "contraction_guard" => cfg.contraction_guard = v.extract()?,
            "blowup_threshold" => cfg.blowup_threshold = v.extract()?,
            "output_dt" => cfg.output_dt = v.extract()?,
            "min_window" => cfg.min_window = v.extract()?,
            other => return Err(PyValueError::new_err(format!("unknown solver setting `{other}`"))),
        }
    }
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

#[pyclass(name = "Trajectory", module = "halfline_nls")]
struct PyTrajectory {
    inner: CoreTrajectory,
    problem: CoreProblem,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn status(&self) -> &'static str {
        self.inner.status.label()
    }

    #[getter]
    fn h1_norms(&self) -> Vec<f64> {
        let q = self.problem.potential.sqrt_v1();
        self.inner.fields.iter().map(|u| h1_norm(u, q)).collect()
    }

    #[getter]
    fn max_contraction_ratio(&self) -> f64 {
        self.inner.max_contraction_ratio()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn field(&self, k: usize) -> PyResult<Vec<Complex64>> {
        self.inner
            .fields
            .get(k)
            .map(|u| u.values().to_vec())
            .ok_or_else(|| PyValueError::new_err(format!("output index {k} out of range")))
    }

    fn masses(&self) -> Vec<f64> {
        self.inner.fields.iter().map(|u| l2_norm(u).powi(2)).collect()
    }

    /// Mass, energy and momentum identity series as a dict of lists.
    fn identities<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = &self.problem;
        let r: IdentityReport =
            identity_residuals(&self.inner, &p.potential, &p.nonlinearity, &p.force, PotentialTerm::Direct)
                .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("times", r.times)?;
        d.set_item("mass", r.mass)?;
        d.set_item("energy", r.energy)?;
        d.set_item("flux", r.flux)?;
        d.set_item("residual_mass", r.residual_mass)?;
        d.set_item("residual_energy", r.residual_energy)?;
        d.set_item("residual_momentum", r.residual_momentum)?;
        Ok(d)
    }
}

/// `(a, ν, k)` for exponent `p`.
#[pyfunction]
fn gn_exponents(p: f64) -> PyResult<(f64, f64, f64)> {
    let g = gn_parameters(p).map_err(py_err)?;
    Ok((g.a, g.nu, g.k))
}

/// `‖u‖_{p+1}^{p+1} / (‖u_x‖^{a(p+1)} ‖u‖^{(p+1)(1-a)})` for samples on `[0, L]`.
#[pyfunction]
fn gn_ratio(values: Vec<Complex64>, length: f64, p: f64) -> PyResult<f64> {
    let grid = Grid::new(length, values.len().saturating_sub(2)).map_err(py_err)?;
    let u = ComplexField::new(grid, values).map_err(py_err)?;
    Ok(check_gn(&u, p).map_err(py_err)?.ratio)
}

/// 𝓗₁ norm with no confining part.
#[pyfunction]
fn h1(values: Vec<Complex64>, length: f64) -> PyResult<f64> {
    let grid = Grid::new(length, values.len().saturating_sub(2)).map_err(py_err)?;
    let u = ComplexField::new(grid, values).map_err(py_err)?;
    Ok(h1_norm(&u, &vec![0.0; grid.len()]))
}

#[pyfunction]
fn presets() -> String {
    halfline_nls::cli::presets().to_string()
}

#[pymodule]
#[pyo3(name = "halfline_nls")]
fn halfline_nls_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(gn_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(gn_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(h1, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    Ok(())
}
