//! Python bindings: graphs, requirement matrices, Gomory-Hu trees, the
//! violated-set oracle and the iterative-rounding solver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sndp::ghtree;
use sndp::io::{generate_instance as gen, parse_instance as parse, run, Mode, RunConfig};
use sndp::rounding::{self, PinPolicy, SolveConfig, ZetaPolicy};
use sndp::requirements::find_violated_set as violated;
use sndp::{EdgeWeights, Error, ProperFunction};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Invariant { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Graph", module = "sndp_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyGraph {
    inner: sndp::Graph,
}

#[pymethods]
impl PyGraph {
    /// `edges` is a list of `(u, v, cost)`; parallel edges are allowed.
    #[new]
    fn new(num_vertices: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        Ok(PyGraph {
            inner: sndp::Graph::new(num_vertices, &edges).map_err(to_py)?,
        })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn edges(&self) -> Vec<(usize, usize, usize, f64)> {
        self.inner.edges().iter().map(|e| (e.id, e.u, e.v, e.cost)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Graph(num_vertices={}, num_edges={})", self.inner.num_vertices(), self.inner.num_edges())
    }
}

#[pyclass(name = "RequirementMatrix", module = "sndp_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyRequirements {
    inner: sndp::RequirementMatrix,
}

#[pymethods]
impl PyRequirements {
    #[new]
    fn new(num_vertices: usize) -> Self {
        PyRequirements {
            inner: sndp::RequirementMatrix::new(num_vertices),
        }
    }

    #[staticmethod]
    fn uniform(num_vertices: usize, value: u64) -> Self {
        PyRequirements {
            inner: sndp::RequirementMatrix::uniform(num_vertices, value),
        }
    }

    fn set(&mut self, u: usize, v: usize, r: u64) -> PyResult<()> {
        self.inner.set(u, v, r).map_err(to_py)
    }

    fn get(&self, u: usize, v: usize) -> u64 {
        self.inner.get(u, v)
    }

    /// `f(S)` for the vertex set `S`.
    fn cut_value(&self, members: Vec<usize>) -> PyResult<u64> {
        let cut = sndp::Cut::new(self.inner.num_vertices(), members).map_err(to_py)?;
        self.inner.eval(&cut).map_err(to_py)
    }

    #[getter]
    fn max_value(&self) -> u64 {
        self.inner.max_value()
    }
}

#[pyclass(name = "SolveResult", module = "sndp_py", get_all)]
pub struct PySolveResult {
    /// Multiplicity per edge id.
    z: Vec<u64>,
    cost: f64,
    lp_lower_bound: f64,
    certified_ratio: f64,
    iterations: usize,
    gh_builds: u64,
    report: String,
}

#[pymethods]
impl PySolveResult {
    fn __repr__(&self) -> String {
        format!(
            "SolveResult(cost={}, lp_lower_bound={:.6}, certified_ratio={:.6}, iterations={})",
            self.cost, self.lp_lower_bound, self.certified_ratio, self.iterations
        )
    }
}

fn zeta_policy(zeta: &Bound<'_, PyAny>) -> PyResult<ZetaPolicy> {
    if let Ok(v) = zeta.extract::<f64>() {
        return Ok(ZetaPolicy::Fixed(v));
    }
    match zeta.extract::<String>()?.as_str() {
        "uniform" => Ok(ZetaPolicy::Uniform),
        "budgeted" => Ok(ZetaPolicy::Budgeted),
        other => Err(PyValueError::new_err(format!("unknown zeta policy {other:?}"))),
    }
}

/// Integral solution of the network design problem.
#[pyfunction]
#[pyo3(signature = (graph, requirements, epsilon=0.5, jobs=1, rational=false, zeta=None, pins="all"))]
fn solve(
    py: Python<'_>,
    graph: PyRef<'_, PyGraph>,
    requirements: PyRef<'_, PyRequirements>,
    epsilon: f64,
    jobs: usize,
    rational: bool,
    zeta: Option<Bound<'_, PyAny>>,
    pins: &str,
) -> PyResult<PySolveResult> {
    let config = SolveConfig {
        epsilon,
        jobs,
        exact_certification: rational,
        zeta: zeta.as_ref().map(zeta_policy).transpose()?.unwrap_or(ZetaPolicy::Uniform),
        pinning: match pins {
            "all" => PinPolicy::All,
            "shortcut" => PinPolicy::Shortcut,
            other => return Err(PyValueError::new_err(format!("unknown pin policy {other:?}"))),
        },
    };
    let (g, f) = (graph.inner.clone(), requirements.inner.clone());
    let rep = py.detach(move || rounding::solve(&g, &f, &config)).map_err(to_py)?;
    Ok(PySolveResult {
        report: serde_json::to_string(&rep).map_err(|e| PyRuntimeError::new_err(e.to_string()))?,
        z: rep.z,
        cost: rep.cost,
        lp_lower_bound: rep.lp_lower_bound,
        certified_ratio: rep.certified_ratio,
        iterations: rep.iterations,
        gh_builds: rep.gh_builds,
    })
}

/// `(primal cost, dual lower bound, x per edge)` for the LP relaxation.
#[pyfunction]
#[pyo3(signature = (graph, requirements, accuracy=0.1, rational=false))]
fn solve_relaxation(
    graph: PyRef<'_, PyGraph>,
    requirements: PyRef<'_, PyRequirements>,
    accuracy: f64,
    rational: bool,
) -> PyResult<(f64, f64, Vec<f64>)> {
    let lp = rounding::solve_relaxation(&graph.inner, &requirements.inner, accuracy, rational).map_err(to_py)?;
    Ok((lp.cost, lp.dual_bound, lp.x.values().to_vec()))
}

/// Tree edges as `(u, v, weight, vertices of the fundamental cut)`.
#[pyfunction]
fn gomory_hu(graph: PyRef<'_, PyGraph>, weights: Vec<f64>) -> PyResult<Vec<(usize, usize, f64, Vec<usize>)>> {
    let tree = ghtree::gomory_hu(&graph.inner, &EdgeWeights::new(weights)).map_err(to_py)?;
    Ok(tree
        .edges()
        .iter()
        .map(|e| (e.u, e.v, e.weight, e.cut.vertices().collect()))
        .collect())
}

/// `(value, source side)` of a minimum `s`-`t` cut.
#[pyfunction]
fn min_cut(graph: PyRef<'_, PyGraph>, weights: Vec<f64>, s: usize, t: usize) -> PyResult<(f64, Vec<usize>)> {
    let c = ghtree::min_cut(&graph.inner, &EdgeWeights::new(weights), s, t).map_err(to_py)?;
    let side = c.source_side.iter().enumerate().filter(|(_, &b)| b).map(|(v, _)| v).collect();
    Ok((c.value, side))
}

/// A set `S` with `f(S) > z(δ(S))`, or `None` if `z` is feasible.
#[pyfunction]
fn find_violated_set(
    graph: PyRef<'_, PyGraph>,
    requirements: PyRef<'_, PyRequirements>,
    z: Vec<u64>,
) -> PyResult<Option<Vec<usize>>> {
    let s = violated(&graph.inner, &requirements.inner, &EdgeWeights::new(z)).map_err(to_py)?;
    Ok(s.map(|c| c.vertices().collect()))
}

/// A random instance as JSON text.
#[pyfunction]
#[pyo3(signature = (seed, vertices, density=0.3, rmax=2))]
fn generate_instance(seed: u64, vertices: usize, density: f64, rmax: u64) -> PyResult<String> {
    Ok(gen(seed, vertices, density, rmax).map_err(to_py)?.to_json())
}

/// Parses instance JSON into `(Graph, RequirementMatrix, vertex names)`.
#[pyfunction]
fn parse_instance(text: &str) -> PyResult<(PyGraph, PyRequirements, Vec<String>)> {
    let inst = parse(text).map_err(to_py)?;
    Ok((
        PyGraph { inner: inst.graph },
        PyRequirements {
            inner: inst.requirements,
        },
        inst.file.vertices,
    ))
}

/// Runs `solve` on instance JSON and returns the report document without
/// its timing section.
#[pyfunction]
#[pyo3(signature = (text, epsilon=0.5))]
fn solve_report(text: &str, epsilon: f64) -> PyResult<String> {
    let inst = parse(text).map_err(to_py)?;
    let report = run(&RunConfig::new(Mode::Solve, epsilon), Some(&inst)).map_err(to_py)?;
    Ok(report.render_body())
}

#[pymodule]
fn sndp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyRequirements>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_relaxation, m)?)?;
    m.add_function(wrap_pyfunction!(gomory_hu, m)?)?;
    m.add_function(wrap_pyfunction!(min_cut, m)?)?;
    m.add_function(wrap_pyfunction!(find_violated_set, m)?)?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(parse_instance, m)?)?;
    m.add_function(wrap_pyfunction!(solve_report, m)?)?;
    Ok(())
}
