//! Python bindings: games, strategies, see-saw lower bounds, SDP relaxations.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use num_bigint::BigInt;
use num_rational::BigRational;
use xorq::games::{self, GameMatrix};
use xorq::heuristics::{self, OptimizerConfig};
use xorq::linalg::{c64, CMat};
use xorq::relaxations::{self, RelaxationResult};
use xorq::report::{BiasReport, EntangledValue, MeValue};
use xorq::strategies::{self, Strategy};
use xorq::{io, sdp};

fn to_py(e: xorq::Error) -> PyErr {
    use xorq::Error::*;
    match e {
        Infeasible(_) | Unbounded(_) | MaxIterations { .. } | Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn split(m: &CMat) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |f: fn(&xorq::C64) -> f64| (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect();
    (rows(|z| z.re), rows(|z| z.im))
}

#[pyclass(name = "Game", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGame {
    inner: GameMatrix,
}

#[pymethods]
impl PyGame {
    #[staticmethod]
    fn chsh() -> Self {
        PyGame { inner: games::from_classical(&games::chsh()) }
    }

    #[staticmethod]
    fn t(n: usize) -> PyResult<Self> {
        Ok(PyGame { inner: games::t_game(n).map_err(to_py)? })
    }

    #[staticmethod]
    fn h(n: usize) -> PyResult<Self> {
        Ok(PyGame { inner: games::h_game(n).map_err(to_py)? })
    }

    #[staticmethod]
    fn c(n: usize) -> PyResult<Self> {
        Ok(PyGame { inner: games::c_game(n).map_err(to_py)? })
    }

    /// n²×n² matrix from nested lists of real and (optionally) imaginary parts.
    #[staticmethod]
    #[pyo3(signature = (n, re, im=None))]
    fn from_matrix(n: usize, re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let dim = n * n;
        let ok = |m: &Vec<Vec<f64>>| m.len() == dim && m.iter().all(|r| r.len() == dim);
        if !ok(&re) || !im.as_ref().is_none_or(ok) {
            return Err(PyValueError::new_err(format!("expected {dim}x{dim} nested lists")));
        }
        let m = CMat::from_fn(dim, dim, |r, c| c64(re[r][c], im.as_ref().map_or(0.0, |i| i[r][c])));
        Ok(PyGame { inner: games::validate(&m, n).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyGame { inner: io::game_from_json(text.as_bytes()).map_err(to_py)? })
    }

    fn to_json(&self) -> PyResult<String> {
        let bytes = io::game_to_json(&self.inner).map_err(to_py)?;
        Ok(String::from_utf8(bytes).expect("JSON is UTF-8"))
    }

    fn tensor(&self, other: &PyGame) -> Self {
        PyGame { inner: games::tensor_games(&self.inner, &other.inner) }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn trace_norm(&self) -> f64 {
        self.inner.trace_norm()
    }

    #[getter]
    fn is_classical(&self) -> bool {
        self.inner.as_classical().is_some()
    }

    /// (real part, imaginary part) as nested lists.
    fn matrix(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        split(self.inner.matrix())
    }

    fn __repr__(&self) -> String {
        format!("Game(n={}, trace_norm={:.6})", self.inner.n(), self.inner.trace_norm())
    }
}

#[pyclass(name = "Strategy", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStrategy {
    inner: Strategy,
}

#[pymethods]
impl PyStrategy {
    #[staticmethod]
    fn t_unentangled(n: usize) -> PyResult<Self> {
        Ok(PyStrategy { inner: strategies::t_unentangled_strategy(n).map_err(to_py)? })
    }

    #[staticmethod]
    fn t_entangled(n: usize, d: usize) -> PyResult<Self> {
        Ok(PyStrategy { inner: strategies::t_entangled_strategy(n, d).map_err(to_py)? })
    }

    #[staticmethod]
    fn h1_unentangled() -> Self {
        PyStrategy { inner: strategies::h1_unentangled_strategy() }
    }

    #[staticmethod]
    fn h1_me() -> Self {
        PyStrategy { inner: strategies::h1_me_strategy() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (_, s) = io::strategy_from_json(text.as_bytes()).map_err(to_py)?;
        Ok(PyStrategy { inner: s })
    }

    /// Serializes for a game with n messages.
    fn to_json(&self, n: usize) -> PyResult<String> {
        let bytes = io::strategy_to_json(&self.inner, n).map_err(to_py)?;
        Ok(String::from_utf8(bytes).expect("JSON is UTF-8"))
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind())
    }

    /// Operators A and B, each as (real part, imaginary part).
    fn operators(&self) -> ((Vec<Vec<f64>>, Vec<Vec<f64>>), (Vec<Vec<f64>>, Vec<Vec<f64>>)) {
        let (a, b) = self.inner.operators();
        (split(a), split(b))
    }

    fn __repr__(&self) -> String {
        format!("Strategy({:?})", self.inner.kind())
    }
}

#[pyclass(name = "RelaxationResult", frozen)]
struct PyRelaxation {
    name: &'static str,
    inner: RelaxationResult,
}

#[pymethods]
impl PyRelaxation {
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn dual_value(&self) -> f64 {
        self.inner.dual_value
    }

    #[getter]
    fn solver_gap(&self) -> f64 {
        self.inner.solver_gap
    }

    /// Witness in the xorq-result-v1 format.
    fn to_json(&self) -> PyResult<String> {
        let bytes = io::to_json_bytes(&io::result_to_file(self.name, &self.inner)).map_err(to_py)?;
        Ok(String::from_utf8(bytes).expect("JSON is UTF-8"))
    }

    /// (objective, constraint violation) recomputed from the witness.
    fn check(&self, game: &PyGame) -> PyResult<(f64, f64)> {
        let c = relaxations::check_witness(game.inner.matrix(), &self.inner.witness).map_err(to_py)?;
        Ok((c.objective, c.violation))
    }

    fn __repr__(&self) -> String {
        format!("RelaxationResult({}, value={:.9})", self.name, self.inner.value)
    }
}

fn cfg(restarts: usize, seed: u64) -> OptimizerConfig {
    OptimizerConfig { restarts, seed, ..OptimizerConfig::default() }
}

#[pyfunction]
fn bias(game: &PyGame, strategy: &PyStrategy) -> PyResult<f64> {
    strategies::bias(&game.inner, &strategy.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (game, restarts=50, seed=0))]
fn omega_lower(game: &PyGame, restarts: usize, seed: u64) -> PyResult<(f64, PyStrategy)> {
    let r = heuristics::omega_lower(&game.inner, &cfg(restarts, seed)).map_err(to_py)?;
    Ok((r.value, PyStrategy { inner: r.strategy }))
}

#[pyfunction]
#[pyo3(signature = (game, restarts=50, seed=0))]
fn omega_c_lower(game: &PyGame, restarts: usize, seed: u64) -> PyResult<(f64, PyStrategy)> {
    let r = heuristics::omega_c_lower(&game.inner, &cfg(restarts, seed)).map_err(to_py)?;
    Ok((r.value, PyStrategy { inner: r.strategy }))
}

#[pyfunction]
#[pyo3(signature = (game, d, restarts=50, seed=0))]
fn me_lower(game: &PyGame, d: usize, restarts: usize, seed: u64) -> PyResult<(f64, PyStrategy)> {
    let r = heuristics::me_lower(&game.inner, d, &cfg(restarts, seed)).map_err(to_py)?;
    Ok((r.value, PyStrategy { inner: r.strategy }))
}

#[pyfunction]
#[pyo3(signature = (game, da, db, restarts=50, seed=0))]
fn entangled_lower(game: &PyGame, da: usize, db: usize, restarts: usize, seed: u64) -> PyResult<(f64, PyStrategy)> {
    let r = heuristics::entangled_lower(&game.inner, da, db, &cfg(restarts, seed)).map_err(to_py)?;
    Ok((r.value, PyStrategy { inner: r.strategy }))
}

#[pyfunction]
#[pyo3(signature = (game, tol=1e-6))]
fn beta_sdp(game: &PyGame, tol: f64) -> PyResult<PyRelaxation> {
    let cg = game.inner.as_classical().ok_or_else(|| PyValueError::new_err("beta_sdp needs a classical game"))?;
    Ok(PyRelaxation { name: "beta_sdp", inner: relaxations::beta_sdp(&cg, tol).map_err(to_py)? })
}

#[pyfunction]
#[pyo3(signature = (game, tol=1e-6))]
fn beta_nc(game: &PyGame, tol: f64) -> PyResult<PyRelaxation> {
    Ok(PyRelaxation { name: "beta_nc", inner: relaxations::beta_nc(&game.inner, tol).map_err(to_py)? })
}

#[pyfunction]
#[pyo3(signature = (game, tol=1e-6))]
fn beta_os(game: &PyGame, tol: f64) -> PyResult<PyRelaxation> {
    Ok(PyRelaxation { name: "beta_os", inner: relaxations::beta_os(&game.inner, tol).map_err(to_py)? })
}

/// Exact (ω(H_n), β^nc(H_n)) as ((num, den), (num, den)).
#[pyfunction]
fn h_n_closed_forms(n: u64) -> PyResult<((BigInt, BigInt), (BigInt, BigInt))> {
    let (o, b) = relaxations::h_n_closed_forms(n).map_err(to_py)?;
    let parts = |x: &BigRational| (x.numer().clone(), x.denom().clone());
    Ok((parts(&o), parts(&b)))
}

/// Full report as xorq-report-v1 JSON, chain checks included.
#[pyfunction]
#[pyo3(signature = (game, name="game", tol=1e-6, restarts=50, seed=0, me_dims=vec![], ent=None))]
fn report(
    game: &PyGame,
    name: &str,
    tol: f64,
    restarts: usize,
    seed: u64,
    me_dims: Vec<usize>,
    ent: Option<(usize, usize)>,
) -> PyResult<String> {
    let g = &game.inner;
    let c = cfg(restarts, seed);
    let om = heuristics::omega_lower(g, &c).map_err(to_py)?;
    let oc = heuristics::omega_c_lower_from(g, &c, &om.strategy).map_err(to_py)?;
    let mut rep = BiasReport {
        game: name.to_string(),
        n: g.n(),
        trace_norm: g.trace_norm(),
        omega_lower: Some(om.value),
        omega_c_lower: Some(oc.value),
        seed,
        restarts,
        tol,
        ..BiasReport::default()
    };
    for d in me_dims {
        rep.me_lower.push(MeValue { d, value: heuristics::me_lower(g, d, &c).map_err(to_py)?.value });
    }
    if let Some((da, db)) = ent {
        let value = heuristics::entangled_lower(g, da, db, &c).map_err(to_py)?.value;
        rep.entangled_lower = Some(EntangledValue { da, db, value });
    }
    if let Some(cg) = g.as_classical() {
        rep.beta_sdp = Some(relaxations::beta_sdp(&cg, tol).map_err(to_py)?.value);
    }
    rep.beta_nc = Some(relaxations::beta_nc(g, tol).map_err(to_py)?.value);
    rep.beta_os = Some(relaxations::beta_os(g, tol).map_err(to_py)?.value);
    rep.chains = relaxations::check_chains(g, &rep);
    let bytes = io::to_json_bytes(&rep.to_json(false)).map_err(to_py)?;
    Ok(String::from_utf8(bytes).expect("JSON is UTF-8"))
}

/// Solves an xorq-sdp-v1 instance; returns the solution JSON with its certificate.
#[pyfunction]
#[pyo3(signature = (instance_json, tol=1e-6))]
fn sdp_solve(instance_json: &str, tol: f64) -> PyResult<String> {
    let inst = io::sdp_from_json(instance_json.as_bytes()).map_err(to_py)?;
    let sol = sdp::solve(&inst, tol).map_err(to_py)?;
    let cert = sdp::certify(&inst, &sol);
    let bytes = io::to_json_bytes(&io::solution_to_file(&sol, &cert)).map_err(to_py)?;
    Ok(String::from_utf8(bytes).expect("JSON is UTF-8"))
}

#[pymodule]
fn pyxorq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_class::<PyStrategy>()?;
    m.add_class::<PyRelaxation>()?;
    m.add_function(wrap_pyfunction!(bias, m)?)?;
    m.add_function(wrap_pyfunction!(omega_lower, m)?)?;
    m.add_function(wrap_pyfunction!(omega_c_lower, m)?)?;
    m.add_function(wrap_pyfunction!(me_lower, m)?)?;
    m.add_function(wrap_pyfunction!(entangled_lower, m)?)?;
    m.add_function(wrap_pyfunction!(beta_sdp, m)?)?;
    m.add_function(wrap_pyfunction!(beta_nc, m)?)?;
    m.add_function(wrap_pyfunction!(beta_os, m)?)?;
    m.add_function(wrap_pyfunction!(h_n_closed_forms, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(sdp_solve, m)?)?;
    Ok(())
}
