//! Python bindings for the qwitness toolkit.
//!
//! States and bound results are wrapped as classes; reports come back as
//! plain dictionaries with the same field names as the JSON output of the CLI.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use qw::bounds::{self, DEFAULT_TOL};
use qw::measure::{self, ShotRecord as CoreShotRecord};
use qw::multipartite;
use qw::noise::{self, NoiseFamily, WitnessKind};
use qw::{qudit, state_io, witness, BasisLabel, ComplexMatrix, QwError};

fn py_err(e: QwError) -> PyErr {
    match e {
        QwError::Convergence { .. } | QwError::Contract(_) | QwError::NotBellDiagonal { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, to_py(py, v)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn family(name: &str) -> PyResult<NoiseFamily> {
    NoiseFamily::parse(name).map_err(py_err)
}

fn witness_kind(name: &str) -> PyResult<WitnessKind> {
    WitnessKind::parse(name).map_err(py_err)
}

fn basis(name: &str) -> PyResult<BasisLabel> {
    match name.to_ascii_lowercase().as_str() {
        "z" => Ok(BasisLabel::ZBasis),
        "x" => Ok(BasisLabel::XBasis),
        other => Err(PyValueError::new_err(format!("unknown basis '{other}', expected 'z' or 'x'"))),
    }
}

fn m_value_or_default(d: usize, m_value: Option<f64>) -> PyResult<f64> {
    match m_value {
        Some(m) => Ok(m),
        None => Ok(bounds::separable_bound_m(d, DEFAULT_TOL).map_err(py_err)?.m_value),
    }
}

/// Pure or mixed state of `parties` qudits of local dimension `d`.
#[pyclass(name = "QuditState", module = "qwitness", frozen, from_py_object)]
#[derive(Clone)]
struct PyQuditState {
    inner: qw::QuditState,
}

impl From<qw::QuditState> for PyQuditState {
    fn from(inner: qw::QuditState) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyQuditState {
    /// Pure state from a unit-norm amplitude list (set `normalize` to rescale).
    #[staticmethod]
    #[pyo3(signature = (d, parties, amplitudes, normalize = false))]
    fn pure(d: usize, parties: usize, amplitudes: Vec<Complex64>, normalize: bool) -> PyResult<Self> {
        let state = if normalize {
            qw::QuditState::pure_normalized(d, parties, amplitudes)
        } else {
            qw::QuditState::pure(d, parties, amplitudes)
        };
        state.map(Self::from).map_err(py_err)
    }

    /// Density matrix given as a list of rows.
    #[staticmethod]
    fn density(d: usize, parties: usize, rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("density matrix must be square"));
        }
        let m = ComplexMatrix::from_row_major(rows.into_iter().flatten().collect()).map_err(py_err)?;
        qw::QuditState::density(d, parties, m).map(Self::from).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        state_io::state_from_json(text).map(Self::from).map_err(py_err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        state_io::read_state(&path).map(Self::from).map_err(py_err)
    }

    fn to_json(&self) -> String {
        state_io::state_to_json(&self.inner)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        state_io::write_state(&path, &self.inner).map_err(py_err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn parties(&self) -> usize {
        self.inner.parties()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn is_pure(&self) -> bool {
        self.inner.is_pure()
    }

    /// Amplitudes of a pure state, `None` for a density matrix.
    fn amplitudes(&self) -> Option<Vec<Complex64>> {
        self.inner.amplitudes().map(<[_]>::to_vec)
    }

    fn density_matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.inner.density_matrix();
        m.data().chunks(m.dim()).map(<[_]>::to_vec).collect()
    }

    fn z_probabilities(&self) -> Vec<f64> {
        self.inner.z_probabilities()
    }

    fn x_probabilities(&self) -> PyResult<Vec<f64>> {
        self.inner.x_probabilities().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "QuditState(d={}, parties={}, {})",
            self.inner.d(),
            self.inner.parties(),
            if self.inner.is_pure() { "pure" } else { "density" }
        )
    }
}

/// Separable bound `M_d` with its optimal angle and optimizer state.
#[pyclass(name = "BoundResult", module = "qwitness", frozen, from_py_object)]
#[derive(Clone)]
struct PyBoundResult {
    inner: bounds::BoundResult,
}

#[pymethods]
impl PyBoundResult {
    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn weight(&self) -> Option<f64> {
        self.inner.weight
    }

    #[getter]
    fn m_value(&self) -> f64 {
        self.inner.m_value
    }

    #[getter]
    fn theta_star(&self) -> f64 {
        self.inner.theta_star
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn optimizer_state(&self) -> PyQuditState {
        self.inner.optimizer_state.clone().into()
    }

    /// `(P, P̄)`: Z- and X-basis outcome distributions of the optimizer state.
    fn optimal_distributions(&self) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let pair = self.inner.optimal_distributions().map_err(py_err)?;
        Ok((pair.p, pair.p_bar))
    }

    fn __repr__(&self) -> String {
        format!(
            "BoundResult(d={}, m_value={}, theta_star={})",
            self.inner.d, self.inner.m_value, self.inner.theta_star
        )
    }
}

/// Outcome counts of one joint measurement setting.
#[pyclass(name = "ShotRecord", module = "qwitness", frozen, from_py_object)]
#[derive(Clone)]
struct PyShotRecord {
    inner: CoreShotRecord,
}

#[pymethods]
impl PyShotRecord {
    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn basis(&self) -> &'static str {
        match self.inner.basis {
            BasisLabel::ZBasis => "z",
            BasisLabel::XBasis => "x",
        }
    }

    #[getter]
    fn shots(&self) -> u64 {
        self.inner.shots
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// Row-major `d × d` counts.
    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.inner.counts.clone()
    }

    fn count(&self, j: usize, k: usize) -> PyResult<u64> {
        if j >= self.inner.d || k >= self.inner.d {
            return Err(PyValueError::new_err("outcome index out of range"));
        }
        Ok(self.inner.count(j, k))
    }

    fn __repr__(&self) -> String {
        format!("ShotRecord(d={}, basis='{}', shots={})", self.inner.d, self.basis(), self.inner.shots)
    }
}

#[pyfunction]
fn mes(d: usize) -> PyResult<PyQuditState> {
    qudit::mes(d).map(Into::into).map_err(py_err)
}

#[pyfunction]
fn bell_state(d: usize, l: usize, m: usize) -> PyResult<PyQuditState> {
    qudit::bell_state(d, l, m).map(Into::into).map_err(py_err)
}

#[pyfunction]
fn ghz_state(d: usize, n: usize) -> PyResult<PyQuditState> {
    qudit::ghz_state(d, n).map(Into::into).map_err(py_err)
}

#[pyfunction]
fn cluster_state(d: usize, n: usize) -> PyResult<PyQuditState> {
    qudit::cluster_state(d, n).map(Into::into).map_err(py_err)
}

/// Noisy MES family member; `family` is one of `psi`, `phi`, `iso`.
#[pyfunction]
fn noisy_state(d: usize, family: &str, p: f64) -> PyResult<PyQuditState> {
    noise::noisy_state(d, self::family(family)?, p).map(Into::into).map_err(py_err)
}

#[pyfunction]
fn product(factors: Vec<PyQuditState>) -> PyResult<PyQuditState> {
    let states: Vec<qw::QuditState> = factors.into_iter().map(|s| s.inner).collect();
    qw::QuditState::product(&states).map(Into::into).map_err(py_err)
}

/// Convex mixture from `(weight, state)` pairs.
#[pyfunction]
fn mixture(components: Vec<(f64, PyQuditState)>) -> PyResult<PyQuditState> {
    let parts: Vec<(f64, &qw::QuditState)> = components.iter().map(|(w, s)| (*w, &s.inner)).collect();
    qw::QuditState::mixture(&parts).map(Into::into).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (d, tol = DEFAULT_TOL))]
fn separable_bound_m(d: usize, tol: f64) -> PyResult<PyBoundResult> {
    let inner = bounds::separable_bound_m(d, tol).map_err(py_err)?;
    Ok(PyBoundResult { inner })
}

/// Bound of the convex-sum form with weight `p` on the Z term.
#[pyfunction]
#[pyo3(signature = (d, weight, tol = DEFAULT_TOL))]
fn separable_bound_weighted(d: usize, weight: f64, tol: f64) -> PyResult<PyBoundResult> {
    let inner = bounds::separable_bound_weighted(d, Some(weight), tol).map_err(py_err)?;
    Ok(PyBoundResult { inner })
}

/// Independent estimate of `M_d` by ascent over single-qudit states.
#[pyfunction]
#[pyo3(signature = (d, restarts = 32, seed = 0))]
fn direct_state_oracle_m(py: Python<'_>, d: usize, restarts: usize, seed: u64) -> PyResult<f64> {
    py.detach(|| bounds::direct_state_oracle_m(d, restarts, seed)).map_err(py_err)
}

/// Witness report of a two-qudit state as a dict.
#[pyfunction]
#[pyo3(signature = (state, bound = None))]
fn evaluate_witnesses<'py>(
    py: Python<'py>,
    state: &PyQuditState,
    bound: Option<&PyBoundResult>,
) -> PyResult<Bound<'py, PyAny>> {
    let computed;
    let bound = match bound {
        Some(b) => &b.inner,
        None => {
            computed = bounds::separable_bound_m(state.inner.d(), DEFAULT_TOL).map_err(py_err)?;
            &computed
        }
    };
    let report = witness::evaluate_witnesses(&state.inner, bound).map_err(py_err)?;
    serialize(py, &report)
}

/// Bell-basis diagonal of `C_d` (`"c"`) or `R_d` (`"r"`) as a `d × d` nested list.
#[pyfunction]
fn bell_coefficients(witness: &str, d: usize) -> PyResult<Vec<Vec<f64>>> {
    let op = match witness_kind(witness)? {
        WitnessKind::Cd => witness::correlation_operator_c(d),
        WitnessKind::Rd => witness::amplitude_operator_r(d),
    }
    .map_err(py_err)?;
    let coeffs = witness::bell_coefficients(&op, d).map_err(py_err)?;
    Ok(coeffs.coeffs.chunks(d).map(<[_]>::to_vec).collect())
}

#[pyfunction]
#[pyo3(signature = (d, family, witness, m_value = None))]
fn threshold<'py>(
    py: Python<'py>,
    d: usize,
    family: &str,
    witness: &str,
    m_value: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let kind = witness_kind(witness)?;
    let m = match kind {
        WitnessKind::Rd => Some(m_value_or_default(d, m_value)?),
        WitnessKind::Cd => m_value,
    };
    let res = noise::threshold(d, self::family(family)?, kind, m).map_err(py_err)?;
    serialize(py, &res)
}

/// `(X, Y)` exclusive regions as `(lo, hi)` tuples or `None`.
#[pyfunction]
#[pyo3(signature = (d, m_value = None))]
#[allow(clippy::type_complexity)]
fn exclusive_regions(d: usize, m_value: Option<f64>) -> PyResult<(Option<(f64, f64)>, Option<(f64, f64)>)> {
    let m = m_value_or_default(d, m_value)?;
    let (x, y) = noise::exclusive_regions(d, m).map_err(py_err)?;
    Ok((x.map(|i| (i.lo, i.hi)), y.map(|i| (i.lo, i.hi))))
}

#[pyfunction]
#[pyo3(signature = (d_min = 2, d_max = 20))]
fn figure2_scan<'py>(py: Python<'py>, d_min: usize, d_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let rows = py.detach(|| noise::figure2_scan(d_min, d_max)).map_err(py_err)?;
    serialize(py, &rows)
}

/// `(W, violated)` for the GHZ pair test with partner site `m` (1-based).
#[pyfunction]
#[pyo3(signature = (state, m, m_value = None))]
fn ghz_pair_test(state: &PyQuditState, m: usize, m_value: Option<f64>) -> PyResult<(f64, bool)> {
    let bound = m_value_or_default(state.inner.d(), m_value)?;
    multipartite::ghz_pair_test(&state.inner, m, bound).map_err(py_err)
}

/// `(W, violated)` for the cluster pair test with partner site `m` (1-based).
#[pyfunction]
#[pyo3(signature = (state, m, m_value = None))]
fn cluster_pair_test(state: &PyQuditState, m: usize, m_value: Option<f64>) -> PyResult<(f64, bool)> {
    let bound = m_value_or_default(state.inner.d(), m_value)?;
    multipartite::cluster_pair_test(&state.inner, m, bound).map_err(py_err)
}

#[pyfunction]
fn sample_joint_basis(state: &PyQuditState, basis: &str, shots: u64, seed: u64) -> PyResult<PyShotRecord> {
    let inner = measure::sample_joint_basis(&state.inner, self::basis(basis)?, shots, seed).map_err(py_err)?;
    Ok(PyShotRecord { inner })
}

/// `c_hat`, `r_hat` and their standard errors from one record per setting.
#[pyfunction]
fn estimate<'py>(py: Python<'py>, z: &PyShotRecord, x: &PyShotRecord) -> PyResult<Bound<'py, PyAny>> {
    let report = measure::estimate(&z.inner, &x.inner).map_err(py_err)?;
    serialize(py, &report)
}

#[pyfunction]
#[pyo3(signature = (z, x, bound = None, sigmas = 5.0))]
fn certify_from_shots<'py>(
    py: Python<'py>,
    z: &PyShotRecord,
    x: &PyShotRecord,
    bound: Option<&PyBoundResult>,
    sigmas: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let computed;
    let bound = match bound {
        Some(b) => &b.inner,
        None => {
            computed = bounds::separable_bound_m(z.inner.d, DEFAULT_TOL).map_err(py_err)?;
            &computed
        }
    };
    let report = measure::certify_from_shots(&z.inner, &x.inner, bound, sigmas).map_err(py_err)?;
    serialize(py, &report)
}

/// Fourier-based entanglement witnesses for qudits.
#[pymodule]
fn qwitness(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA", qw::SCHEMA)?;
    m.add("EPS_DECIDE", qw::EPS_DECIDE)?;
    m.add_class::<PyQuditState>()?;
    m.add_class::<PyBoundResult>()?;
    m.add_class::<PyShotRecord>()?;
    m.add_function(wrap_pyfunction!(mes, m)?)?;
    m.add_function(wrap_pyfunction!(bell_state, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_state, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_state, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_state, m)?)?;
    m.add_function(wrap_pyfunction!(product, m)?)?;
    m.add_function(wrap_pyfunction!(mixture, m)?)?;
    m.add_function(wrap_pyfunction!(separable_bound_m, m)?)?;
    m.add_function(wrap_pyfunction!(separable_bound_weighted, m)?)?;
    m.add_function(wrap_pyfunction!(direct_state_oracle_m, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_witnesses, m)?)?;
    m.add_function(wrap_pyfunction!(bell_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(exclusive_regions, m)?)?;
    m.add_function(wrap_pyfunction!(figure2_scan, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_pair_test, m)?)?;
    m.add_function(wrap_pyfunction!(cluster_pair_test, m)?)?;
    m.add_function(wrap_pyfunction!(sample_joint_basis, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(certify_from_shots, m)?)?;
    Ok(())
}
