//! Python bindings: `import lupiet`.
//!
//! Configuration crosses the boundary as plain dicts with the same keys as
//! the TOML config; run records come back as dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;

use lupiet_core::corpus::{self, SynthSpec};
use lupiet_core::metrics::{self, CurveSpec};
use lupiet_core::models::{self, Architecture, ModelParams};
use lupiet_core::training::{self, DistillConfig, KlDirection, RunRecord, TrainConfig};
use lupiet_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::Parameter(_) | Error::Validation(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn from_dict<T: DeserializeOwned + Default>(py: Python<'_>, d: Option<&Bound<'_, PyDict>>) -> PyResult<T> {
    let Some(d) = d else { return Ok(T::default()) };
    let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_dict<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn arch(name: &str) -> PyResult<Architecture> {
    name.parse().map_err(to_py)
}

fn direction(name: &str) -> PyResult<KlDirection> {
    match name {
        "student-first" => Ok(KlDirection::StudentFirst),
        "teacher-first" => Ok(KlDirection::TeacherFirst),
        other => Err(PyValueError::new_err(format!(
            "unknown direction `{other}` (student-first | teacher-first)"
        ))),
    }
}

fn distill_config(tau: f64, alpha: f64, tau_squared: bool, dir: &str) -> PyResult<DistillConfig> {
    let cfg = DistillConfig {
        tau,
        alpha,
        tau_squared,
        direction: direction(dir)?,
    };
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Labelled time series of timestamped documents.
#[pyclass(name = "Corpus", frozen)]
struct PyCorpus(corpus::Corpus);

#[pymethods]
impl PyCorpus {
    /// Synthetic corpus; keyword arguments are generator spec fields.
    #[staticmethod]
    #[pyo3(signature = (**spec))]
    fn generate(py: Python<'_>, spec: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let spec: SynthSpec = from_dict(py, spec)?;
        corpus::generate_synthetic(&spec).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        corpus::load_corpus(path).map(Self).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        corpus::save_corpus(&self.0, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.0.num_classes()
    }

    /// `(train, validation, test)` sample counts.
    fn split_counts(&self) -> (usize, usize, usize) {
        let c = self.0.split_counts();
        (c.train, c.validation, c.test)
    }

    fn __repr__(&self) -> String {
        let c = self.0.split_counts();
        format!("Corpus(train={}, validation={}, test={})", c.train, c.validation, c.test)
    }
}

/// Trained parameters plus the record of the run that produced them.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    params: ModelParams,
    record: Option<RunRecord>,
    vocab_hash: String,
}

impl PyModel {
    fn from_run((params, record): (ModelParams, RunRecord)) -> Self {
        Self {
            vocab_hash: record.vocab_hash.clone(),
            params,
            record: Some(record),
        }
    }
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let (params, vocab_hash) = models::load_checkpoint(path).map_err(to_py)?;
        Ok(Self {
            params,
            record: None,
            vocab_hash,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        models::save_checkpoint(&self.params, &self.vocab_hash, path).map_err(to_py)
    }

    #[getter]
    fn architecture(&self) -> String {
        self.params.architecture.to_string()
    }

    #[getter]
    fn num_parameters(&self) -> usize {
        self.params.num_parameters()
    }

    #[getter]
    fn vocab_hash(&self) -> &str {
        &self.vocab_hash
    }

    /// SHA-256 over parameter names, shapes and values.
    fn digest(&self) -> String {
        training::params_digest(&self.params)
    }

    /// Run record as a dict, or None for a model loaded from a checkpoint.
    #[getter]
    fn record(&self, py: Python<'_>) -> PyResult<Option<Py<PyAny>>> {
        self.record.as_ref().map(|r| to_dict(py, r)).transpose()
    }

    #[getter]
    fn test_metrics(&self, py: Python<'_>) -> PyResult<Option<Py<PyAny>>> {
        self.record.as_ref().map(|r| to_dict(py, &r.test_metrics)).transpose()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.params.bitwise_eq(&other.params)
    }
}

#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus::tokenize(text)
}

#[pyfunction]
fn derive_seed(base: u64, label: &str) -> u64 {
    training::derive_seed(base, label)
}

#[pyfunction]
#[pyo3(signature = (logits, tau=1.0))]
fn softmax(logits: Vec<f64>, tau: f64) -> PyResult<Vec<f64>> {
    lupiet_core::diffcore::softmax_with_temperature(&logits, tau).map_err(to_py)
}

/// Distillation term between student and teacher logits.
#[pyfunction]
#[pyo3(signature = (student, teacher, tau=2.0, tau_squared=false, direction="student-first"))]
fn distill_loss(student: Vec<f64>, teacher: Vec<f64>, tau: f64, tau_squared: bool, direction: &str) -> PyResult<f64> {
    let cfg = distill_config(tau, 0.5, tau_squared, direction)?;
    training::distill_loss(&student, &teacher, &cfg).map_err(to_py)
}

/// `(1 - alpha) * cross-entropy + alpha * distillation`.
#[pyfunction]
#[pyo3(signature = (student, teacher, label, tau=2.0, alpha=0.5, tau_squared=false, direction="student-first"))]
fn combined_loss(
    student: Vec<f64>,
    teacher: Vec<f64>,
    label: usize,
    tau: f64,
    alpha: f64,
    tau_squared: bool,
    direction: &str,
) -> PyResult<f64> {
    let cfg = distill_config(tau, alpha, tau_squared, direction)?;
    training::combined_loss(&student, &teacher, label, &cfg).map_err(to_py)
}

#[pyfunction]
fn auroc(labels: Vec<bool>, scores: Vec<f64>) -> PyResult<f64> {
    metrics::auroc_binary(&labels, &scores).map_err(to_py)
}

#[pyfunction]
fn aupr(labels: Vec<bool>, scores: Vec<f64>) -> PyResult<f64> {
    metrics::aupr_binary(&labels, &scores).map_err(to_py)
}

/// Accuracy and macro-F1 from class labels and per-class scores.
#[pyfunction]
fn classification_metrics(labels: Vec<usize>, scores: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    let p = metrics::ScoredPredictions::new(labels, scores).map_err(to_py)?;
    Ok((metrics::accuracy(&p), metrics::macro_f1(&p)))
}

#[pyfunction]
#[pyo3(signature = (corpus, window=1.0, architecture="word", config=None))]
fn train_standard(
    py: Python<'_>,
    corpus: &PyCorpus,
    window: f64,
    architecture: &str,
    config: Option<&Bound<'_, PyDict>>,
) -> PyResult<PyModel> {
    let cfg: TrainConfig = from_dict(py, config)?;
    let a = arch(architecture)?;
    py.detach(|| training::train_standard(&corpus.0, a, window, &cfg))
        .map(PyModel::from_run)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (
    corpus, teacher_window, baseline_window=1.0, architecture="word", config=None,
    tau=2.0, alpha=0.5, tau_squared=false, direction="student-first"
))]
#[allow(clippy::too_many_arguments)]
fn train_lupiet(
    py: Python<'_>,
    corpus: &PyCorpus,
    teacher_window: f64,
    baseline_window: f64,
    architecture: &str,
    config: Option<&Bound<'_, PyDict>>,
    tau: f64,
    alpha: f64,
    tau_squared: bool,
    direction: &str,
) -> PyResult<PyModel> {
    let cfg: TrainConfig = from_dict(py, config)?;
    let d = distill_config(tau, alpha, tau_squared, direction)?;
    let a = arch(architecture)?;
    py.detach(|| training::train_lupiet(&corpus.0, a, baseline_window, teacher_window, &cfg, &d))
        .map(PyModel::from_run)
        .map_err(to_py)
}

/// Sequential fine-tuning along `windows`, longest first.
#[pyfunction]
#[pyo3(signature = (corpus, windows, architecture="word", config=None))]
fn train_transfer(
    py: Python<'_>,
    corpus: &PyCorpus,
    windows: Vec<f64>,
    architecture: &str,
    config: Option<&Bound<'_, PyDict>>,
) -> PyResult<PyModel> {
    let cfg: TrainConfig = from_dict(py, config)?;
    let a = arch(architecture)?;
    py.detach(|| training::train_transfer(&corpus.0, a, &windows, &cfg))
        .map(PyModel::from_run)
        .map_err(to_py)
}

/// One model trained on the union of views at every window.
#[pyfunction]
#[pyo3(signature = (corpus, windows, architecture="word", config=None))]
fn train_mixed(
    py: Python<'_>,
    corpus: &PyCorpus,
    windows: Vec<f64>,
    architecture: &str,
    config: Option<&Bound<'_, PyDict>>,
) -> PyResult<PyModel> {
    let cfg: TrainConfig = from_dict(py, config)?;
    let a = arch(architecture)?;
    py.detach(|| training::train_mixed(&corpus.0, a, &windows, &cfg))
        .map(PyModel::from_run)
        .map_err(to_py)
}

/// Baseline, teacher and LuPIET test metrics on nested training subsets.
/// Returns the table as CSV text.
#[pyfunction]
#[pyo3(signature = (
    corpus, ratios, seeds, teacher_window=3.0, baseline_window=1.0, architecture="word",
    config=None, tau=2.0, alpha=0.5
))]
#[allow(clippy::too_many_arguments)]
fn learning_curve(
    py: Python<'_>,
    corpus: &PyCorpus,
    ratios: Vec<f64>,
    seeds: Vec<u64>,
    teacher_window: f64,
    baseline_window: f64,
    architecture: &str,
    config: Option<&Bound<'_, PyDict>>,
    tau: f64,
    alpha: f64,
) -> PyResult<String> {
    let spec = CurveSpec {
        architecture: arch(architecture)?,
        baseline_window,
        teacher_window,
        train: from_dict(py, config)?,
        distill: distill_config(tau, alpha, false, "student-first")?,
    };
    py.detach(|| metrics::learning_curve(&corpus.0, &spec, &ratios, &seeds))
        .map(|c| c.to_csv())
        .map_err(to_py)
}

#[pymodule]
fn lupiet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(softmax, m)?)?;
    m.add_function(wrap_pyfunction!(distill_loss, m)?)?;
    m.add_function(wrap_pyfunction!(combined_loss, m)?)?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(aupr, m)?)?;
    m.add_function(wrap_pyfunction!(classification_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(train_standard, m)?)?;
    m.add_function(wrap_pyfunction!(train_lupiet, m)?)?;
    m.add_function(wrap_pyfunction!(train_transfer, m)?)?;
    m.add_function(wrap_pyfunction!(train_mixed, m)?)?;
    m.add_function(wrap_pyfunction!(learning_curve, m)?)?;
    Ok(())
}
