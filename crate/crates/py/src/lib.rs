use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigUint;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stakeweight::metrics;
use stakeweight::report::{self, ComparisonReport};
use stakeweight::simulate::{self, AnnualRate};
use stakeweight::{apply_weights, ingest, srsw, EconParams, Validator, ValidatorSnapshot, WeightScheme};

create_exception!(stakeweight, StakeweightError, PyValueError);

fn err(e: stakeweight::Error) -> PyErr {
    StakeweightError::new_err(e.to_string())
}

fn scheme(name: &str) -> PyResult<WeightScheme> {
    name.parse().map_err(err)
}

/// A validator set in canonical order (stake descending, address ascending).
#[pyclass(name = "Snapshot", frozen, from_py_object)]
#[derive(Clone)]
struct PySnapshot {
    inner: ValidatorSnapshot,
}

#[pymethods]
impl PySnapshot {
    /// `validators` is a list of `(address, stake)` or `(address, stake, moniker)`.
    #[new]
    #[pyo3(signature = (chain, validators, captured_at=None))]
    fn new(
        chain: String,
        validators: Vec<Bound<'_, PyAny>>,
        captured_at: Option<&str>,
    ) -> PyResult<Self> {
        let at = match captured_at {
            Some(s) => chrono::DateTime::parse_from_rfc3339(s)
                .map_err(|e| StakeweightError::new_err(e.to_string()))?
                .with_timezone(&chrono::Utc),
            None => chrono::DateTime::<chrono::Utc>::UNIX_EPOCH,
        };
        let validators = validators
            .iter()
            .map(|item| {
                let (address, stake, moniker) = match item.extract::<(String, BigUint)>() {
                    Ok((a, s)) => (a, s, None),
                    Err(_) => item.extract::<(String, BigUint, Option<String>)>()?,
                };
                Ok(Validator { address, stake, moniker })
            })
            .collect::<PyResult<Vec<_>>>()?;
        let inner = ValidatorSnapshot::new(chain, at, validators).map_err(err)?;
        Ok(PySnapshot { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (stakes, chain="python"))]
    fn from_stakes(stakes: Vec<BigUint>, chain: &str) -> PyResult<Self> {
        let inner = ValidatorSnapshot::from_stakes(chain, stakes).map_err(err)?;
        Ok(PySnapshot { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = ingest::read_snapshot(&path).map_err(err)?;
        Ok(PySnapshot { inner })
    }

    #[staticmethod]
    fn parse(data: &[u8]) -> PyResult<Self> {
        let inner = ingest::parse_snapshot(data).map_err(err)?;
        Ok(PySnapshot { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        ingest::write_snapshot(&self.inner, &path).map_err(err)
    }

    fn to_json(&self) -> String {
        ingest::to_document_string(&self.inner)
    }

    #[getter]
    fn chain(&self) -> String {
        self.inner.chain.clone()
    }

    #[getter]
    fn captured_at(&self) -> String {
        self.inner.captured_at.to_rfc3339()
    }

    #[getter]
    fn addresses(&self) -> Vec<String> {
        self.inner.validators().iter().map(|v| v.address.clone()).collect()
    }

    #[getter]
    fn stakes(&self) -> Vec<BigUint> {
        self.inner.validators().iter().map(|v| v.stake.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Snapshot(chain={:?}, m={})", self.inner.chain, self.inner.len())
    }
}

#[pyclass(name = "MetricsReport", frozen)]
struct PyMetricsReport {
    inner: stakeweight::MetricsReport,
}

#[pymethods]
impl PyMetricsReport {
    #[getter]
    fn chain(&self) -> String {
        self.inner.chain.clone()
    }
    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme.name()
    }
    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }
    #[getter]
    fn gini(&self) -> f64 {
        self.inner.gini
    }
    #[getter]
    fn nakamoto_liveness(&self) -> usize {
        self.inner.nakamoto_liveness
    }
    #[getter]
    fn rho_liveness(&self) -> f64 {
        self.inner.rho_liveness
    }
    #[getter]
    fn nakamoto_safety(&self) -> usize {
        self.inner.nakamoto_safety
    }
    #[getter]
    fn rho_safety(&self) -> f64 {
        self.inner.rho_safety
    }
    #[getter]
    fn epsilon(&self) -> BTreeMap<u8, f64> {
        self.inner.epsilon_by_delta.clone()
    }

    /// The table row, e.g. `180  0.69  3.89 (7)  13.33 (24)  ...`.
    fn row(&self) -> String {
        report::metrics_row(&self.inner)
    }

    fn to_json(&self) -> String {
        report::render_metrics_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "MetricsReport(chain={:?}, scheme={}, m={}, gini={:.4}, nakamoto_liveness={}, nakamoto_safety={})",
            self.inner.chain,
            self.inner.scheme,
            self.inner.m,
            self.inner.gini,
            self.inner.nakamoto_liveness,
            self.inner.nakamoto_safety
        )
    }
}

#[pyfunction]
#[pyo3(signature = (snapshot, scheme_name="linear", deltas=vec![0, 50]))]
fn analyze(snapshot: &PySnapshot, scheme_name: &str, deltas: Vec<u8>) -> PyResult<PyMetricsReport> {
    let inner = report::analyze(&snapshot.inner, scheme(scheme_name)?, &deltas).map_err(err)?;
    Ok(PyMetricsReport { inner })
}

#[pyfunction]
#[pyo3(signature = (snapshot, scheme_name="linear"))]
fn gini(snapshot: &PySnapshot, scheme_name: &str) -> PyResult<f64> {
    metrics::gini(&apply_weights(&snapshot.inner, scheme(scheme_name)?)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (snapshot, scheme_name="linear"))]
fn lorenz_points(snapshot: &PySnapshot, scheme_name: &str) -> PyResult<Vec<(f64, f64)>> {
    metrics::lorenz_points(&apply_weights(&snapshot.inner, scheme(scheme_name)?)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (snapshot, scheme_name="linear"))]
fn nakamoto_liveness(snapshot: &PySnapshot, scheme_name: &str) -> PyResult<usize> {
    metrics::nakamoto_liveness(&apply_weights(&snapshot.inner, scheme(scheme_name)?)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (snapshot, scheme_name="linear"))]
fn nakamoto_safety(snapshot: &PySnapshot, scheme_name: &str) -> PyResult<usize> {
    metrics::nakamoto_safety(&apply_weights(&snapshot.inner, scheme(scheme_name)?)).map_err(err)
}

#[pyfunction]
fn scale_nakamoto(n: usize, m: usize) -> PyResult<f64> {
    metrics::scale_nakamoto(n, m).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (snapshot, delta, scheme_name="linear"))]
fn epsilon(snapshot: &PySnapshot, delta: u8, scheme_name: &str) -> PyResult<f64> {
    metrics::epsilon(&apply_weights(&snapshot.inner, scheme(scheme_name)?), delta).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (snapshot, scheme_name="linear"))]
fn quorum_threshold(snapshot: &PySnapshot, scheme_name: &str) -> PyResult<f64> {
    let q = srsw::quorum_threshold(&apply_weights(&snapshot.inner, scheme(scheme_name)?)).map_err(err)?;
    Ok(q.threshold)
}

#[pyfunction]
#[pyo3(signature = (snapshot, indices, scheme_name="linear"))]
fn meets_quorum(snapshot: &PySnapshot, indices: Vec<usize>, scheme_name: &str) -> PyResult<bool> {
    srsw::meets_quorum(&apply_weights(&snapshot.inner, scheme(scheme_name)?), &indices).map_err(err)
}

#[pyfunction]
fn select_top_m(snapshot: &PySnapshot, cap_m: usize) -> PyResult<(PySnapshot, BigUint)> {
    let (inner, threshold) = srsw::select_top_m(&snapshot.inner, cap_m).map_err(err)?;
    Ok((PySnapshot { inner }, threshold))
}

#[pyfunction]
#[pyo3(signature = (stake, alpha, threshold_stake, scheme_name="srsw"))]
fn reward(stake: BigUint, alpha: f64, threshold_stake: BigUint, scheme_name: &str) -> PyResult<f64> {
    let params = EconParams::new(alpha, usize::MAX, 0.0, scheme(scheme_name)?).map_err(err)?;
    Ok(srsw::reward(&stake, &params, &threshold_stake))
}

#[pyfunction]
#[pyo3(signature = (stake, threshold_stake, alpha, cost=0.0, scheme_name="srsw"))]
fn sybil_split_analysis<'py>(
    py: Python<'py>,
    stake: BigUint,
    threshold_stake: BigUint,
    alpha: f64,
    cost: f64,
    scheme_name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let params = EconParams::new(alpha, usize::MAX, cost, scheme(scheme_name)?).map_err(err)?;
    let v = srsw::sybil_split_analysis(&stake, &params, &threshold_stake).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("stake", v.stake)?;
    d.set_item("single_reward", v.single_reward)?;
    d.set_item("best_split", v.best_split)?;
    d.set_item("best_split_reward", v.best_split_reward)?;
    d.set_item("rational_to_split", v.rational_to_split)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (snapshot, epochs, alpha=None, scheme_name="linear", cap_m=None, annual_rate=None, epochs_per_year=365))]
#[allow(clippy::too_many_arguments)]
fn simulate_rewards<'py>(
    py: Python<'py>,
    snapshot: &PySnapshot,
    epochs: usize,
    alpha: Option<f64>,
    scheme_name: &str,
    cap_m: Option<usize>,
    annual_rate: Option<f64>,
    epochs_per_year: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let cap = cap_m.unwrap_or(snapshot.inner.len());
    let annual = annual_rate.map(|rate| AnnualRate { rate, epochs_per_year });
    let alpha = match (alpha, annual) {
        (_, Some(a)) if epochs_per_year > 0 => a.per_epoch(),
        (Some(alpha), None) => alpha,
        _ => return Err(StakeweightError::new_err("give alpha, or annual_rate with positive epochs_per_year")),
    };
    let params = EconParams::new(alpha, cap, 0.0, scheme(scheme_name)?).map_err(err)?;
    let t = simulate::simulate_rewards(&snapshot.inner, &params, epochs, annual).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("alpha", t.alpha)?;
    d.set_item("addresses", t.addresses)?;
    d.set_item("epochs", t.epochs)?;
    d.set_item("stakes", t.stakes)?;
    d.set_item("rewards", t.rewards)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (snapshot, draws, seed, scheme_name="linear"))]
fn proposer_distribution<'py>(
    py: Python<'py>,
    snapshot: &PySnapshot,
    draws: u64,
    seed: u64,
    scheme_name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let ws = apply_weights(&snapshot.inner, scheme(scheme_name)?);
    let h = simulate::proposer_distribution(&ws, draws, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("algorithm", h.algorithm)?;
    d.set_item("seed", h.seed)?;
    d.set_item("draws", h.draws)?;
    d.set_item("addresses", h.addresses)?;
    d.set_item("counts", h.counts)?;
    d.set_item("expected_share", h.expected_share)?;
    Ok(d)
}

/// Linear vs SRSW comparison over several snapshots, as a JSON document.
#[pyfunction]
#[pyo3(signature = (snapshots, deltas=vec![0, 50]))]
fn compare(snapshots: Vec<PySnapshot>, deltas: Vec<u8>) -> PyResult<String> {
    let rows = snapshots
        .iter()
        .map(|s| report::compare_snapshot(&s.inner, &deltas))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(ComparisonReport::from_rows(rows).render_json())
}

#[pymodule]
#[pyo3(name = "stakeweight")]
fn stakeweight_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("StakeweightError", m.py().get_type::<StakeweightError>())?;
    m.add_class::<PySnapshot>()?;
    m.add_class::<PyMetricsReport>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(lorenz_points, m)?)?;
    m.add_function(wrap_pyfunction!(nakamoto_liveness, m)?)?;
    m.add_function(wrap_pyfunction!(nakamoto_safety, m)?)?;
    m.add_function(wrap_pyfunction!(scale_nakamoto, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(quorum_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(meets_quorum, m)?)?;
    m.add_function(wrap_pyfunction!(select_top_m, m)?)?;
    m.add_function(wrap_pyfunction!(reward, m)?)?;
    m.add_function(wrap_pyfunction!(sybil_split_analysis, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_rewards, m)?)?;
    m.add_function(wrap_pyfunction!(proposer_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
