//! Python bindings: datasets, substitute metrics, soft labelers, the
//! trainer and the finite-domain oracle.
//!
//! Structured results (frontiers, reports) cross the boundary as plain
//! Python dicts built from their JSON form.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyAny;
use serde::Serialize;

use softpu::dataset::{self, GscarConfig, MelaConfig, PuBenchmarkConfig};
use softpu::experiment::{run_experiment as run, ExperimentConfig};
use softpu::metrics::{self, CurveKind};
use softpu::oracle;
use softpu::soft_labeler::{self, CheckRecord, FitOptions, RuleStats};
use softpu::trainer::{self, Architecture, TrainConfig};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn curve_kind(kind: &str) -> PyResult<CurveKind> {
    match kind {
        "spu" => Ok(CurveKind::Spu),
        "real" => Ok(CurveKind::Real),
        other => Err(PyValueError::new_err(format!("kind must be 'spu' or 'real', got {other:?}"))),
    }
}

/// Immutable soft-labelled dataset.
#[pyclass(name = "SoftDataset", module = "softpu_py", frozen)]
struct PySoftDataset {
    inner: softpu::SoftDataset,
}

#[pymethods]
impl PySoftDataset {
    /// `features` is a list of rows; `true_labels` is optional.
    #[new]
    #[pyo3(signature = (features, soft_labels, feature_names, true_labels=None))]
    fn new(
        features: Vec<Vec<f64>>,
        soft_labels: Vec<f64>,
        feature_names: Vec<String>,
        true_labels: Option<Vec<bool>>,
    ) -> PyResult<Self> {
        if features.len() != soft_labels.len() || true_labels.as_ref().is_some_and(|y| y.len() != soft_labels.len()) {
            return Err(PyValueError::new_err("features, soft_labels and true_labels differ in length"));
        }
        let samples = features
            .into_iter()
            .zip(soft_labels)
            .enumerate()
            .map(|(i, (x, s))| softpu::SoftSample::new(x, s, true_labels.as_ref().map(|y| y[i])))
            .collect();
        let inner = softpu::SoftDataset::new(samples, feature_names, dataset::Provenance::Loaded).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load_csv(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: dataset::load_csv(path, None).map_err(err)?,
        })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path).map_err(err)?;
        dataset::write_csv(&self.inner, std::io::BufWriter::new(file)).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn provenance(&self) -> &'static str {
        self.inner.provenance().as_str()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        self.inner.features().map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn soft_labels(&self) -> Vec<f64> {
        self.inner.soft_labels()
    }

    /// `None` unless every sample carries a true label.
    #[getter]
    fn true_labels(&self) -> Option<Vec<bool>> {
        self.inner.true_labels().ok()
    }

    fn drop_features(&self, names: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.drop_features(&names).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "SoftDataset(rows={}, features={:?}, provenance={:?})",
            self.inner.len(),
            self.inner.feature_names(),
            self.inner.provenance().as_str()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (n, pi, seed=0))]
fn gen_gscar(n: usize, pi: f64, seed: u64) -> PyResult<PySoftDataset> {
    let inner = dataset::gen_gscar(&GscarConfig { n, pi, seed }).map_err(err)?;
    Ok(PySoftDataset { inner })
}

#[pyfunction]
#[pyo3(signature = (n, pi, seed=0))]
fn gen_pu_benchmark(n: usize, pi: f64, seed: u64) -> PyResult<PySoftDataset> {
    let inner = dataset::gen_pu_benchmark(&PuBenchmarkConfig::new(n, pi, seed)).map_err(err)?;
    Ok(PySoftDataset { inner })
}

/// Takes the generator config as JSON; returns the dataset and a dict of
/// per-cell `eta`, `h(eta)` and realised `E[S|X]`.
#[pyfunction]
fn gen_mela<'py>(py: Python<'py>, config_json: &str) -> PyResult<(PySoftDataset, Bound<'py, PyAny>)> {
    let cfg: MelaConfig = serde_json::from_str(config_json).map_err(err)?;
    let out = dataset::gen_mela(&cfg).map_err(err)?;
    let cells = serde_json::json!({
        "cell_eta": out.cell_eta,
        "cell_link": out.cell_link,
        "cell_mean_s": out.cell_mean_s,
    });
    Ok((PySoftDataset { inner: out.dataset }, to_py(py, &cells)?))
}

#[pyfunction]
fn pu_labelize(data: &PySoftDataset, seed: u64) -> PyResult<PySoftDataset> {
    let inner = dataset::pu_labelize(&data.inner, seed).map_err(err)?;
    Ok(PySoftDataset { inner })
}

#[pyfunction]
fn tpr_spu(soft_labels: Vec<f64>, predictions: Vec<bool>) -> PyResult<f64> {
    metrics::tpr_spu(&soft_labels, &predictions).map_err(err)
}

#[pyfunction]
fn fpr_spu(soft_labels: Vec<f64>, predictions: Vec<bool>) -> PyResult<f64> {
    metrics::fpr_spu(&soft_labels, &predictions).map_err(err)
}

/// `(fpr, tpr)` points of the substitute ROC curve.
#[pyfunction]
fn roc_spu(soft_labels: Vec<f64>, scores: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    let curve = metrics::roc_spu(&soft_labels, &scores).map_err(err)?;
    Ok(curve.points().iter().map(|p| (p.x, p.y)).collect())
}

#[pyfunction]
fn auc_spu(soft_labels: Vec<f64>, scores: Vec<f64>) -> PyResult<f64> {
    metrics::auc_spu(&soft_labels, &scores).map_err(err)
}

#[pyfunction]
fn auc_spu_bound(soft_labels: Vec<f64>) -> PyResult<f64> {
    metrics::auc_spu_bound(&soft_labels).map_err(err)
}

#[pyfunction]
fn real_auc(labels: Vec<bool>, scores: Vec<f64>) -> PyResult<f64> {
    metrics::real_auc(&labels, &scores).map_err(err)
}

#[pyfunction]
fn mixture_coefficients<'py>(py: Python<'py>, pi: f64, s_p: f64, s_n: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &metrics::mixture_coefficients(pi, s_p, s_n).map_err(err)?)
}

#[pyfunction]
fn rule_soft_label(fail_ratio_rule: f64, fail_ratio_random: f64) -> PyResult<f64> {
    soft_labeler::rule_soft_label(&RuleStats {
        fail_ratio_rule,
        fail_ratio_random,
    })
    .map_err(err)
}

/// Prior over a user's pass probability.
#[pyclass(name = "Prior", module = "softpu_py", frozen)]
struct PyPrior {
    inner: soft_labeler::DiscretePrior,
    objective_trace: Vec<f64>,
    converged: bool,
}

#[pymethods]
impl PyPrior {
    #[staticmethod]
    fn uniform(grid: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: soft_labeler::DiscretePrior::uniform(grid).map_err(err)?,
            objective_trace: Vec::new(),
            converged: true,
        })
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.objective_trace.clone()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.converged
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn mass_within(&self, lo: f64, hi: f64) -> f64 {
        self.inner.mass_within(lo, hi)
    }

    /// `E[theta | n, k]`.
    fn pass_probability(&self, n: u32, k: u32) -> PyResult<f64> {
        let rec = CheckRecord::new(n, k).map_err(err)?;
        soft_labeler::posterior_pass_probability(&rec, &self.inner).map_err(err)
    }

    /// `1 - E[theta | n, k]`.
    fn soft_label(&self, n: u32, k: u32) -> PyResult<f64> {
        let rec = CheckRecord::new(n, k).map_err(err)?;
        soft_labeler::bayes_soft_label(&rec, &self.inner).map_err(err)
    }
}

/// Fits the prior to `(n, k)` check records.
#[pyfunction]
#[pyo3(signature = (records, grid_size=101, lam=1e-3, step_size=0.5, max_iters=2000, tol=1e-10))]
fn fit_prior(
    records: Vec<(u32, u32)>,
    grid_size: usize,
    lam: f64,
    step_size: f64,
    max_iters: usize,
    tol: f64,
) -> PyResult<PyPrior> {
    let records = records
        .into_iter()
        .map(|(n, k)| CheckRecord::new(n, k))
        .collect::<softpu::Result<Vec<_>>>()
        .map_err(err)?;
    let opts = FitOptions {
        grid_size,
        lambda: lam,
        step_size,
        max_iters,
        tol,
    };
    let fit = soft_labeler::fit_prior(&records, &opts).map_err(err)?;
    Ok(PyPrior {
        inner: fit.prior,
        objective_trace: fit.objective_trace,
        converged: fit.converged,
    })
}

/// Trained scorer with outputs in `(0, 1)`.
#[pyclass(name = "Model", module = "softpu_py", frozen)]
struct PyModel {
    inner: softpu::TrainedModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: softpu::TrainedModel::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn scores(&self, data: &PySoftDataset) -> PyResult<Vec<f64>> {
        self.inner.model.scores(&data.inner).map_err(err)
    }

    fn score(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.model.feature_dim {
            return Err(PyValueError::new_err(format!(
                "expected {} features, got {}",
                self.inner.model.feature_dim,
                x.len()
            )));
        }
        Ok(self.inner.model.score(&x))
    }

    #[getter]
    fn loss_trace(&self) -> Vec<f64> {
        self.inner.loss_trace.clone()
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.model.params.clone()
    }
}

/// `architecture` is `"linear"` or `"mlp"`.
#[pyfunction]
#[pyo3(signature = (data, architecture="linear", hidden=16, learning_rate=0.5, epochs=20, batch_size=128, seed=0, l2=0.0))]
#[allow(clippy::too_many_arguments)]
fn train(
    data: &PySoftDataset,
    architecture: &str,
    hidden: usize,
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    l2: f64,
) -> PyResult<PyModel> {
    let arch = match architecture {
        "linear" => Architecture::LinearLogistic,
        "mlp" => Architecture::Mlp { hidden },
        other => return Err(PyValueError::new_err(format!("unknown architecture {other:?}"))),
    };
    let cfg = TrainConfig {
        learning_rate,
        epochs,
        batch_size,
        seed,
        l2,
    };
    Ok(PyModel {
        inner: trainer::train(&data.inner, arch, &cfg).map_err(err)?,
    })
}

/// Finite problem: per-cell mass, `P(Y=1|X)` and `E[S|X]`.
#[pyclass(name = "DiscreteProblem", module = "softpu_py", frozen)]
struct PyProblem {
    inner: oracle::DiscreteProblem,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_counts(counts: Vec<u32>, eta: Vec<f64>, eta_s: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: oracle::DiscreteProblem::from_counts(&counts, &eta, &eta_s).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: serde_json::from_str(text).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (cells, seed, epsilon=0.0))]
    fn random_mela(cells: usize, seed: u64, epsilon: f64) -> PyResult<Self> {
        let mut rng = softpu::rng::seeded(seed);
        let inner = if epsilon == 0.0 {
            oracle::mela_problem(cells, dataset::Link::IDENTITY, &mut rng)
        } else {
            oracle::noisy_mela_problem(cells, dataset::Link::IDENTITY, epsilon, &mut rng)
        };
        Ok(Self {
            inner: inner.map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn pi(&self) -> f64 {
        self.inner.pi()
    }

    /// `(fpr, tpr)` of the classifier accepting the cells in `mask`.
    fn rates(&self, mask: u32, kind: &str) -> PyResult<(f64, f64)> {
        Ok(self.inner.rates(mask, curve_kind(kind)?))
    }

    fn frontier<'py>(&self, py: Python<'py>, kind: &str) -> PyResult<Bound<'py, PyAny>> {
        let f = oracle::exhaustive_frontier(&self.inner, curve_kind(kind)?).map_err(err)?;
        to_py(py, &f)
    }

    fn verify_mela<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &oracle::verify_mela_optimality(&self.inner).map_err(err)?)
    }

    /// `m` defaults to the smallest slice density the problem admits.
    #[pyo3(signature = (epsilon, c_h=1.0, m=None))]
    fn verify_noisy_gap<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        c_h: f64,
        m: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let m = m.unwrap_or_else(|| oracle::slice_density(&self.inner, 2.0 * epsilon / c_h));
        to_py(py, &oracle::verify_noisy_gap(&self.inner, epsilon, c_h, m).map_err(err)?)
    }
}

/// Runs both experiment arms from a JSON config and returns the report.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(err)?;
    let outcome = run(&cfg).map_err(err)?;
    to_py(py, &outcome.report)
}

#[pymodule]
fn softpu_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySoftDataset>()?;
    m.add_class::<PyPrior>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(gen_gscar, m)?)?;
    m.add_function(wrap_pyfunction!(gen_pu_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(gen_mela, m)?)?;
    m.add_function(wrap_pyfunction!(pu_labelize, m)?)?;
    m.add_function(wrap_pyfunction!(tpr_spu, m)?)?;
    m.add_function(wrap_pyfunction!(fpr_spu, m)?)?;
    m.add_function(wrap_pyfunction!(roc_spu, m)?)?;
    m.add_function(wrap_pyfunction!(auc_spu, m)?)?;
    m.add_function(wrap_pyfunction!(auc_spu_bound, m)?)?;
    m.add_function(wrap_pyfunction!(real_auc, m)?)?;
    m.add_function(wrap_pyfunction!(mixture_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(rule_soft_label, m)?)?;
    m.add_function(wrap_pyfunction!(fit_prior, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
