//! Python bindings: policies, batch simulation, mean-field integration and
//! fixed-point stability.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use convlab_core::analysis;
use convlab_core::baseline::{baseline_batch, BaselineConfig};
use convlab_core::meanfield::{self, IntegrateOptions, StateDistribution};
use convlab_core::{Error, PolicyTable, SimConfig, StateIndex, SynthKind, TransitionTable};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::IntegratorBlowUp { .. }
        | Error::NonFinite
        | Error::NoConvergence(_)
        | Error::NoConsensus => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Probability of producing word A for every memory state.
#[pyclass(name = "Policy", module = "convlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPolicy {
    inner: PolicyTable,
}

#[pymethods]
impl PyPolicy {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        PolicyTable::load(path).map(|inner| PyPolicy { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        PolicyTable::from_json(text).map(|inner| PyPolicy { inner }).map_err(to_py)
    }

    /// kind: uniform, constant, biased-empty, word-swap-symmetric, random or majority.
    #[staticmethod]
    #[pyo3(signature = (kind, h, q = 0.5, seed = 0))]
    fn synth(kind: &str, h: usize, q: f64, seed: u64) -> PyResult<Self> {
        let kind = match kind {
            "uniform" => SynthKind::Uniform,
            "constant" => SynthKind::Constant(q),
            "biased-empty" => SynthKind::BiasedEmpty(q),
            "word-swap-symmetric" => SynthKind::WordSwapSymmetric { seed },
            "random" => SynthKind::Random { seed },
            "majority" => SynthKind::Majority { tie: q },
            other => return Err(PyValueError::new_err(format!("unknown policy kind {other:?}"))),
        };
        convlab_core::synth_policy(kind, h)
            .map(|inner| PyPolicy { inner })
            .map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    fn swapped(&self) -> Self {
        PyPolicy {
            inner: self.inner.swapped(),
        }
    }

    fn prob_a(&self, state: usize) -> PyResult<f64> {
        if state >= self.inner.state_count() {
            return Err(PyValueError::new_err(format!("state {state} out of range")));
        }
        Ok(self.inner.prob_a(StateIndex(state)))
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    #[getter(H)]
    fn history_len(&self) -> usize {
        self.inner.history_len()
    }

    #[getter]
    fn word_a(&self) -> String {
        self.inner.word_pair().word_a().to_owned()
    }

    #[getter]
    fn word_b(&self) -> String {
        self.inner.word_pair().word_b().to_owned()
    }

    #[getter]
    fn model(&self) -> String {
        self.inner.metadata.model.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.state_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Policy(words={}, H={}, model={:?})",
            self.inner.word_pair().label(convlab_core::Word::A),
            self.inner.history_len(),
            self.inner.metadata.model
        )
    }
}

#[pyclass(name = "RunResult", module = "convlab", frozen, get_all, from_py_object)]
#[derive(Clone)]
struct PyRunResult {
    /// "A", "B" or "none".
    outcome: String,
    consensus_time: Option<usize>,
    rounds_executed: usize,
    seed: u64,
    trajectory: Option<Vec<f64>>,
}

impl From<&convlab_core::RunResult> for PyRunResult {
    fn from(r: &convlab_core::RunResult) -> Self {
        PyRunResult {
            outcome: r.outcome.label().to_owned(),
            consensus_time: r.consensus_time,
            rounds_executed: r.rounds_executed,
            seed: r.seed,
            trajectory: r.trajectory.clone(),
        }
    }
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(outcome={:?}, consensus_time={:?}, rounds_executed={})",
            self.outcome, self.consensus_time, self.rounds_executed
        )
    }
}

fn outcome_from(label: &str) -> PyResult<convlab_core::Outcome> {
    use convlab_core::Outcome;
    match label {
        "A" => Ok(Outcome::ConsensusA),
        "B" => Ok(Outcome::ConsensusB),
        "none" => Ok(Outcome::NoConsensus),
        other => Err(PyValueError::new_err(format!("unknown outcome {other:?}"))),
    }
}

#[pyfunction]
fn state_count(h: usize) -> usize {
    convlab_core::state_count(h)
}

#[pyfunction]
fn encode_state(state: &str, h: usize) -> PyResult<usize> {
    let m: convlab_core::MemoryState = state.parse().map_err(to_py)?;
    m.encode(h).map(|i| i.get()).map_err(to_py)
}

#[pyfunction]
fn decode_state(index: usize, h: usize) -> PyResult<String> {
    convlab_core::decode_state(StateIndex(index), h)
        .map(|m| m.to_string())
        .map_err(to_py)
}

/// Independent runs; run k is seeded from (seed, k), so results do not depend on thread count.
#[pyfunction]
#[pyo3(signature = (policy, n, runs, seed = 0, max_rounds = 1000, trajectories = false))]
fn simulate(
    py: Python<'_>,
    policy: &PyPolicy,
    n: usize,
    runs: usize,
    seed: u64,
    max_rounds: usize,
    trajectories: bool,
) -> PyResult<Vec<PyRunResult>> {
    let mut config = SimConfig::new(n, seed);
    config.max_rounds = max_rounds;
    config.record_trajectory = trajectories;
    let results = py
        .detach(|| convlab_core::run_batch(&config, &policy.inner, runs))
        .map_err(to_py)?;
    Ok(results.iter().map(PyRunResult::from).collect())
}

fn core_results(results: &[PyRunResult]) -> PyResult<Vec<convlab_core::RunResult>> {
    results
        .iter()
        .map(|r| {
            Ok(convlab_core::RunResult {
                outcome: outcome_from(&r.outcome)?,
                consensus_time: r.consensus_time,
                rounds_executed: r.rounds_executed,
                trajectory: None,
                seed: r.seed,
            })
        })
        .collect()
}

/// Fraction of consensus runs that ended on word A, with its standard error.
#[pyfunction]
fn collective_bias<'py>(
    py: Python<'py>,
    results: Vec<PyRunResult>,
) -> PyResult<Bound<'py, PyDict>> {
    let est = analysis::collective_bias(&core_results(&results)?).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("fraction_a", est.fraction_a)?;
    d.set_item("sem", est.sem)?;
    d.set_item("n_runs", est.n_runs)?;
    d.set_item("n_consensus", est.n_consensus)?;
    d.set_item("n_no_consensus", est.n_no_consensus)?;
    Ok(d)
}

/// Residuals and leading eigenvalues at the all-A and all-B fixed points.
#[pyfunction]
fn stability<'py>(py: Python<'py>, policy: &PyPolicy) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| meanfield::stability_report(&policy.inner))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    for (key, fp) in [("a", &r.all_a), ("b", &r.all_b)] {
        d.set_item(format!("residual_{key}"), fp.residual)?;
        d.set_item(format!("lambda_{key}"), (fp.lambda_max.re, fp.lambda_max.im))?;
        d.set_item(format!("class_{key}"), fp.class.as_str())?;
    }
    Ok(d)
}

/// Integrates the rate equations from empty memories; returns column lists.
#[pyfunction]
#[pyo3(signature = (policy, dt = 0.05, tmax = 500.0))]
fn integrate<'py>(
    py: Python<'py>,
    policy: &PyPolicy,
    dt: f64,
    tmax: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = &policy.inner;
    let run = py
        .detach(|| {
            let trans = TransitionTable::build(p.history_len())?;
            let x0 = StateDistribution::delta(StateIndex::EMPTY, p.state_count());
            let opts = IntegrateOptions {
                dt,
                t_max: tmax,
                ..Default::default()
            };
            meanfield::integrate(&x0, p, &trans, &opts)
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("t", run.samples.iter().map(|s| s.t).collect::<Vec<_>>())?;
    d.set_item("s", run.samples.iter().map(|s| s.production).collect::<Vec<_>>())?;
    d.set_item("mass_all_a", run.samples.iter().map(|s| s.mass_all_a).collect::<Vec<_>>())?;
    d.set_item("mass_all_b", run.samples.iter().map(|s| s.mass_all_b).collect::<Vec<_>>())?;
    d.set_item("steady", run.steady)?;
    Ok(d)
}

/// Minimal naming game with individual bias p.
#[pyfunction]
#[pyo3(signature = (p, n, runs, seed = 0))]
fn baseline(py: Python<'_>, p: f64, n: usize, runs: usize, seed: u64) -> PyResult<Vec<PyRunResult>> {
    let config = BaselineConfig::new(n, p, runs, seed);
    let results = py.detach(|| baseline_batch(&config)).map_err(to_py)?;
    Ok(results.iter().map(PyRunResult::from).collect())
}

#[pyfunction]
fn js_distance(p: [f64; 2], q: [f64; 2]) -> f64 {
    analysis::js_distance(&p, &q)
}

#[pyfunction]
fn exact_binomial_test(k: u64, n: u64, p: f64) -> PyResult<f64> {
    analysis::exact_binomial_test(k, n, p).map_err(to_py)
}

#[pymodule]
fn convlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(state_count, m)?)?;
    m.add_function(wrap_pyfunction!(encode_state, m)?)?;
    m.add_function(wrap_pyfunction!(decode_state, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(collective_bias, m)?)?;
    m.add_function(wrap_pyfunction!(stability, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(baseline, m)?)?;
    m.add_function(wrap_pyfunction!(js_distance, m)?)?;
    m.add_function(wrap_pyfunction!(exact_binomial_test, m)?)?;
    Ok(())
}
