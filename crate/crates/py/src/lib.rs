//! Python bindings: cohort tables, the end-to-end pipeline, generation from
//! a release, metrics, noise calibration and a fixed-point product computed
//! by three in-process servers.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use synthmpc::generator;
use synthmpc::pipeline::cohort::{desk_cohort, DeskCohortSpec};
use synthmpc::pipeline::{self, run::RunConfig, IngestOptions};
use synthmpc::protocols::ReleasedMarginals;
use synthmpc::sharing::share_vector;
use synthmpc::{run_three_party_local, Error, FixedPointCodec, HarnessConfig};

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        3 => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Samples by genes with integer class labels.
#[pyclass(name = "CohortTable", module = "synthmpc", from_py_object)]
#[derive(Clone)]
struct PyCohortTable {
    inner: pipeline::CohortTable,
}

#[pymethods]
impl PyCohortTable {
    #[new]
    #[pyo3(signature = (gene_names, rows, labels, classes=None))]
    fn new(gene_names: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<usize>, classes: Option<usize>) -> PyResult<Self> {
        let classes = classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        let inner = pipeline::CohortTable::new(gene_names, rows, labels, classes).map_err(py_err)?;
        Ok(PyCohortTable { inner })
    }

    /// Reads a CSV whose last column is `label`.
    #[staticmethod]
    #[pyo3(signature = (path, log1p=false, classes=None))]
    fn from_csv(path: PathBuf, log1p: bool, classes: Option<usize>) -> PyResult<Self> {
        let inner = pipeline::CohortTable::load(&path, IngestOptions { log1p, classes }).map_err(py_err)?;
        Ok(PyCohortTable { inner })
    }

    /// Gaussian-mixture test cohort.
    #[staticmethod]
    #[pyo3(signature = (n, genes, classes, seed=0))]
    fn desk(n: usize, genes: usize, classes: usize, seed: u64) -> PyResult<Self> {
        let inner = desk_cohort(&DeskCohortSpec::new(n, genes, classes, seed)).map_err(py_err)?;
        Ok(PyCohortTable { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv_string()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn classes(&self) -> usize {
        self.inner.classes
    }

    #[getter]
    fn gene_names(&self) -> Vec<String> {
        self.inner.gene_names.clone()
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels.clone()
    }

    fn __repr__(&self) -> String {
        format!("CohortTable(n={}, d={}, classes={})", self.inner.n(), self.inner.d(), self.inner.classes)
    }
}

/// Output of [`run_end_to_end`].
#[pyclass(name = "RunResult", module = "synthmpc", frozen)]
struct PyRunResult {
    #[pyo3(get)]
    report_json: String,
    #[pyo3(get)]
    release_json: String,
    #[pyo3(get)]
    synthetic: PyCohortTable,
    #[pyo3(get)]
    train: PyCohortTable,
    #[pyo3(get)]
    test: PyCohortTable,
    #[pyo3(get)]
    sigma: f64,
    #[pyo3(get)]
    protocol_seconds: f64,
}

/// Splits, shares, runs the three servers in-process, generates and scores.
#[pyfunction]
#[pyo3(signature = (cohort, epsilon=1.0, delta=1e-5, holders=3, seed=0, test_fraction=0.2, detpr_k=50, noise_bin_means=true, synthetic_rows=None))]
#[allow(clippy::too_many_arguments)]
fn run_end_to_end(
    py: Python<'_>,
    cohort: &PyCohortTable,
    epsilon: f64,
    delta: f64,
    holders: usize,
    seed: u64,
    test_fraction: f64,
    detpr_k: usize,
    noise_bin_means: bool,
    synthetic_rows: Option<usize>,
) -> PyResult<PyRunResult> {
    let cfg = RunConfig {
        epsilon,
        delta,
        holders,
        seed,
        test_fraction,
        detpr_k,
        noise_bin_means,
        synthetic_rows,
        ..Default::default()
    };
    let table = cohort.inner.clone();
    let out = py.detach(move || pipeline::run_end_to_end(&table, &cfg)).map_err(py_err)?;
    let synthetic = out.synthetic_table().map_err(py_err)?;
    Ok(PyRunResult {
        report_json: out.report.to_json(),
        release_json: out.release.to_json(),
        synthetic: PyCohortTable { inner: synthetic },
        train: PyCohortTable { inner: out.train },
        test: PyCohortTable { inner: out.test },
        sigma: out.dp.sigma,
        protocol_seconds: out.servers.elapsed.as_secs_f64(),
    })
}

/// Samples a synthetic cohort from a released-marginals JSON document.
#[pyfunction]
#[pyo3(signature = (release_json, gene_names, count, seed=0))]
fn generate(release_json: &str, gene_names: Vec<String>, count: usize, seed: u64) -> PyResult<PyCohortTable> {
    let release = ReleasedMarginals::from_json(release_json).map_err(py_err)?;
    let syn = generator::generate(&release, &gene_names, count, seed).map_err(py_err)?;
    let inner = pipeline::run::synthetic_as_table(&syn, release.classes).map_err(py_err)?;
    Ok(PyCohortTable { inner })
}

/// Gaussian noise scale `sigma` for the released tables.
#[pyfunction]
fn calibrate(epsilon: f64, delta: f64, genes: usize) -> PyResult<f64> {
    Ok(generator::calibrate(epsilon, delta, genes).map_err(py_err)?.sigma)
}

#[pyfunction]
fn tstr(train_syn: &PyCohortTable, test_real: &PyCohortTable) -> PyResult<f64> {
    pipeline::tstr(&train_syn.inner, &test_real.inner, Default::default()).map_err(py_err)
}

#[pyfunction]
fn wasserstein(real: &PyCohortTable, syn: &PyCohortTable) -> PyResult<f64> {
    pipeline::wasserstein_mean(&real.inner, &syn.inner).map_err(py_err)
}

#[pyfunction]
fn detpr(real: &PyCohortTable, syn: &PyCohortTable, k: usize) -> PyResult<f64> {
    pipeline::detpr(&real.inner, &syn.inner, k).map_err(py_err)
}

#[pyfunction]
fn dcr(real: &PyCohortTable, syn: &PyCohortTable) -> PyResult<f64> {
    pipeline::dcr(&real.inner, &syn.inner).map_err(py_err)
}

/// Element-wise fixed-point product computed on replicated shares by three
/// in-process servers; returns the revealed result.
#[pyfunction]
#[pyo3(signature = (a, b, seed=0))]
fn secure_multiply(a: Vec<f64>, b: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
    use rand::SeedableRng;
    if a.len() != b.len() {
        return Err(PyValueError::new_err("operands differ in length"));
    }
    let codec = FixedPointCodec::default();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let sa = share_vector(&codec.encode_slice(&a).map_err(py_err)?, &mut rng);
    let sb = share_vector(&codec.encode_slice(&b).map_err(py_err)?, &mut rng);
    let outs = run_three_party_local(HarnessConfig::with_seed(seed), |p| {
        let i = p.id().index();
        let c = p.mul_fixed(&sa[i], &sb[i])?;
        p.reveal_all(&c)
    })
    .map_err(py_err)?;
    Ok(codec.decode_slice(&outs[0].output))
}

#[pymodule]
#[pyo3(name = "synthmpc")]
fn synthmpc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCohortTable>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run_end_to_end, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(tstr, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(detpr, m)?)?;
    m.add_function(wrap_pyfunction!(dcr, m)?)?;
    m.add_function(wrap_pyfunction!(secure_multiply, m)?)?;
    Ok(())
}
