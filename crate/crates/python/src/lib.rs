//! Python module `decohere`: decay laws, Fisher information, probing-ratio solver,
//! particle ensembles and preset batch runs.

use decohere::harness::{self, RunConfig};
use decohere::{infotheory, model, simulator::StreamPurpose, Criterion, Error, MeasurementModel, Strategy};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) | Error::NoMaximum { .. } | Error::NotReached { .. } => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io { .. } | Error::Parse { .. } => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn criterion(name: &str) -> PyResult<Criterion> {
    match name {
        "variance" | "var" => Ok(Criterion::Variance),
        "sensitivity" | "sens" => Ok(Criterion::Sensitivity),
        _ => Err(PyValueError::new_err(format!("unknown criterion `{name}`"))),
    }
}

#[pyclass(name = "DecayLaw", frozen, from_py_object)]
#[derive(Clone)]
struct PyDecayLaw(decohere::DecayLaw);

#[pymethods]
impl PyDecayLaw {
    #[new]
    fn new(t_chi: f64, beta: f64) -> PyResult<Self> {
        decohere::DecayLaw::new(t_chi, beta).map(Self).map_err(to_py)
    }

    #[getter]
    fn t_chi(&self) -> f64 {
        self.0.t_chi()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    fn coherence(&self, tau: f64) -> f64 {
        self.0.coherence(tau)
    }

    fn __repr__(&self) -> String {
        format!("DecayLaw(t_chi={:e}, beta={})", self.0.t_chi(), self.0.beta())
    }
}

#[pyclass(name = "ReadoutModel", frozen, from_py_object)]
#[derive(Clone)]
struct PyReadoutModel(decohere::ReadoutModel);

#[pymethods]
impl PyReadoutModel {
    #[new]
    fn new(p_click_0: f64, p_click_1: f64, repetitions: u64) -> PyResult<Self> {
        decohere::ReadoutModel::new(p_click_0, p_click_1, repetitions)
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn nv_center(repetitions: u64) -> PyResult<Self> {
        decohere::ReadoutModel::nv_center(repetitions).map(Self).map_err(to_py)
    }

    #[getter]
    fn repetitions(&self) -> u64 {
        self.0.repetitions()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn visibility(&self) -> f64 {
        self.0.visibility()
    }

    fn detection_probability(&self, tau: f64, law: &PyDecayLaw) -> f64 {
        model::detection_probability(tau, &law.0, &self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "ReadoutModel(p_click_0={}, p_click_1={}, repetitions={})",
            self.0.p_click_0(),
            self.0.p_click_1(),
            self.0.repetitions()
        )
    }
}

fn measurement(readout: Option<&PyReadoutModel>) -> MeasurementModel {
    readout.map_or(MeasurementModel::SingleShot, |r| MeasurementModel::PhotonCount(r.0))
}

/// Probability of shot outcome `m` (0 or 1) after delay `tau`.
#[pyfunction]
fn outcome_likelihood(m: u64, tau: f64, law: &PyDecayLaw) -> PyResult<f64> {
    let m = decohere::BinaryOutcome::from_bit(m).map_err(to_py)?;
    Ok(model::outcome_likelihood(m, tau, &law.0))
}

/// Gaussian likelihood of `r` photon counts.
#[pyfunction]
fn count_likelihood(r: u64, tau: f64, law: &PyDecayLaw, readout: &PyReadoutModel) -> f64 {
    model::count_likelihood(r, tau, &law.0, &readout.0)
}

/// Single-shot Fisher information about `t_chi`.
#[pyfunction]
fn fisher(tau: f64, law: &PyDecayLaw) -> f64 {
    infotheory::fisher(tau, &law.0)
}

/// Fisher information of one photon-detection repetition.
#[pyfunction]
fn fisher_experimental(tau: f64, law: &PyDecayLaw, readout: &PyReadoutModel) -> f64 {
    infotheory::fisher_experimental(tau, &law.0, &readout.0)
}

/// Optimal ratio `tau / t_chi` for `criterion` ("variance" or "sensitivity").
#[pyfunction]
#[pyo3(signature = (beta, criterion = "variance"))]
fn solve_xi(beta: f64, criterion: &str) -> PyResult<f64> {
    infotheory::solve_xi(beta, self::criterion(criterion)?).map_err(to_py)
}

/// Cramér-Rao uncertainty floor after `total_time` seconds of probing.
#[pyfunction]
#[pyo3(signature = (total_time, law, readout = None, criterion = "sensitivity"))]
fn crlb_envelope(total_time: f64, law: &PyDecayLaw, readout: Option<&PyReadoutModel>, criterion: &str) -> PyResult<f64> {
    Ok(infotheory::crlb_envelope(
        total_time,
        &law.0,
        readout.map(|r| &r.0),
        self::criterion(criterion)?,
    ))
}

#[pyclass(name = "ParticleEnsemble")]
struct PyEnsemble {
    inner: decohere::ParticleEnsemble,
    config: decohere::EstimatorConfig,
    rng: decohere::RandomStream,
}

#[pymethods]
impl PyEnsemble {
    /// Stratified prior of `particles` points on `[prior_low, prior_high]` seconds.
    #[new]
    #[pyo3(signature = (particles, prior_low, prior_high, seed = 0, liu_west_a = 0.98, resample_threshold = 0.5))]
    fn new(
        particles: usize,
        prior_low: f64,
        prior_high: f64,
        seed: u64,
        liu_west_a: f64,
        resample_threshold: f64,
    ) -> PyResult<Self> {
        let config = decohere::EstimatorConfig {
            particle_count: particles,
            prior_low,
            prior_high,
            liu_west_a,
            resample_threshold,
            ..decohere::EstimatorConfig::default()
        };
        let mut rng = decohere::RandomStream::for_replica(seed, 0, StreamPurpose::Estimator);
        let inner = decohere::ParticleEnsemble::from_prior(&config, &mut rng).map_err(to_py)?;
        Ok(Self { inner, config, rng })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn positions(&self) -> Vec<f64> {
        self.inner.positions().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn std_dev(&self) -> f64 {
        self.inner.std_dev()
    }

    fn effective_sample_size(&self) -> f64 {
        self.inner.effective_sample_size()
    }

    /// Bayes update with `outcome` (a bit without `readout`, a count with it).
    #[pyo3(signature = (outcome, tau, beta, readout = None))]
    fn update(&mut self, outcome: u64, tau: f64, beta: f64, readout: Option<&PyReadoutModel>) -> PyResult<()> {
        self.inner
            .bayes_update(outcome, tau, beta, &measurement(readout))
            .map_err(to_py)
    }

    /// Liu-West resampling if the ESS fell below threshold; returns whether it ran.
    fn maybe_resample(&mut self) -> bool {
        self.inner.maybe_resample(&self.config, &mut self.rng)
    }
}

#[pyclass(name = "RunSummary", frozen)]
struct PyRunSummary(harness::RunSummary);

#[pymethods]
impl PyRunSummary {
    #[getter]
    fn strategy(&self) -> String {
        self.0.strategy.to_string()
    }

    #[getter]
    fn replicas(&self) -> usize {
        self.0.replicas
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.0.grid.clone()
    }

    #[getter]
    fn uncertainty(&self) -> Vec<f64> {
        self.0.uncertainty.clone()
    }

    #[getter]
    fn ci_lo(&self) -> Vec<f64> {
        self.0.ci_lo.clone()
    }

    #[getter]
    fn ci_hi(&self) -> Vec<f64> {
        self.0.ci_hi.clone()
    }

    #[getter]
    fn bound(&self) -> Vec<f64> {
        self.0.bound.clone()
    }

    #[getter]
    fn config_hash(&self) -> String {
        self.0.metadata.config_hash.clone()
    }

    /// First grid time at which the RMSE reaches `target` seconds.
    fn time_to_uncertainty(&self, target: f64) -> PyResult<f64> {
        harness::batch::time_to_uncertainty(&self.0, target).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("RunSummary(strategy={}, replicas={}, points={})", self.0.strategy, self.0.replicas, self.0.grid.len())
    }
}

fn run(mut cfg: RunConfig, replicas: Option<usize>, epochs: Option<usize>, particles: Option<usize>, seed: Option<u64>) -> PyResult<Vec<PyRunSummary>> {
    if let Some(r) = replicas {
        cfg.run.replicas = r;
    }
    if let Some(n) = epochs {
        cfg.protocol.epochs = n;
    }
    if let Some(k) = particles {
        cfg.estimator.particles = k;
    }
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    cfg.validate().map_err(to_py)?;
    let summaries = harness::run_all(&cfg).map_err(to_py)?;
    Ok(summaries.into_iter().map(PyRunSummary).collect())
}

/// Runs a named preset, optionally shrunk; returns one summary per strategy.
#[pyfunction]
#[pyo3(signature = (name, replicas = None, epochs = None, particles = None, seed = None))]
fn run_preset(
    py: Python<'_>,
    name: &str,
    replicas: Option<usize>,
    epochs: Option<usize>,
    particles: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Vec<PyRunSummary>> {
    let cfg = RunConfig::preset(name).map_err(to_py)?;
    py.detach(|| run(cfg, replicas, epochs, particles, seed))
}

/// Runs a TOML run configuration given as text.
#[pyfunction]
fn run_config(py: Python<'_>, toml: &str) -> PyResult<Vec<PyRunSummary>> {
    let cfg = RunConfig::from_toml_str(toml).map_err(to_py)?;
    py.detach(|| run(cfg, None, None, None, None))
}

#[pyfunction]
fn strategies() -> Vec<String> {
    Strategy::ALL.iter().map(|s| s.to_string()).collect()
}

#[pymodule]
#[pyo3(name = "decohere")]
fn decohere_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDecayLaw>()?;
    m.add_class::<PyReadoutModel>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyRunSummary>()?;
    m.add_function(wrap_pyfunction!(outcome_likelihood, m)?)?;
    m.add_function(wrap_pyfunction!(count_likelihood, m)?)?;
    m.add_function(wrap_pyfunction!(fisher, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_experimental, m)?)?;
    m.add_function(wrap_pyfunction!(solve_xi, m)?)?;
    m.add_function(wrap_pyfunction!(crlb_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(run_preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(strategies, m)?)?;
    m.add("PRESETS", harness::PRESETS.to_vec())?;
    Ok(())
}
