//! Python bindings. Structured reports cross the boundary as JSON strings;
//! simple values as native Python types.

use std::collections::BTreeMap;
use std::time::Duration;

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use cfgtest::coverage::{dependents_closure, CoverageStats};
use cfgtest::demo;
use cfgtest::io::{load_registry, parse_properties, serialize_properties, write_registry};
use cfgtest::quality::{self, baseline_validate, evaluate_quality, generate_corpus, MutationOperator, QualityError};
use cfgtest::report::{analyze, to_json, CoverageFile, DiffReport, SelectionReport};
use cfgtest::selection::select_tests;
use cfgtest::{compute_diff, ConcretizationPolicy, ConfigStore, Harness, ParamId, ParamRegistry, RunOptions};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn json<T: Serialize>(value: &T) -> PyResult<String> {
    to_json(value).map_err(runtime_err)
}

fn param_id(name: &str) -> PyResult<ParamId> {
    ParamId::new(name).map_err(value_err)
}

fn parse_policy(policy: &str) -> PyResult<ConcretizationPolicy> {
    policy.parse().map_err(value_err)
}

fn parse_operator(name: &str) -> PyResult<MutationOperator> {
    MutationOperator::ALL
        .into_iter()
        .find(|op| op.name() == name)
        .ok_or_else(|| value_err(format!("unknown operator {name:?}")))
}

fn quality_err(e: QualityError) -> PyErr {
    match e {
        QualityError::Harness(_) | QualityError::SeedConfigFails { .. } => runtime_err(e),
        other => value_err(other),
    }
}

/// A validated set of parameter specs.
#[pyclass(module = "cfgtest", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Registry {
    inner: ParamRegistry,
}

#[pymethods]
impl Registry {
    /// The bundled demo registry.
    #[staticmethod]
    fn demo() -> Self {
        Self { inner: demo::demo_registry() }
    }

    /// Parses a registry manifest (`param <id> <type> [default=<v>]`, `dep <a> <kind> <b>`).
    #[staticmethod]
    fn from_manifest(text: &str) -> PyResult<Self> {
        load_registry(text).map(|inner| Self { inner }).map_err(value_err)
    }

    fn to_manifest(&self) -> String {
        write_registry(&self.inner)
    }

    fn ids(&self) -> Vec<String> {
        self.inner.ids().map(|id| id.to_string()).collect()
    }

    fn param_type(&self, name: &str) -> PyResult<String> {
        let spec = self.inner.lookup(name).ok_or_else(|| PyKeyError::new_err(name.to_string()))?;
        Ok(spec.ty.to_string())
    }

    fn default(&self, name: &str) -> PyResult<Option<String>> {
        let spec = self.inner.lookup(name).ok_or_else(|| PyKeyError::new_err(name.to_string()))?;
        Ok(spec.default.clone())
    }

    /// `(dependent, kind, dependee)` triples.
    fn edges(&self) -> Vec<(String, String, String)> {
        self.inner
            .edges()
            .map(|e| (e.dependent.to_string(), format!("{:?}", e.kind).to_lowercase(), e.dependee.to_string()))
            .collect()
    }

    /// The given parameters plus everything that transitively depends on them.
    fn dependents_closure(&self, names: Vec<String>) -> PyResult<Vec<String>> {
        let ids = names.iter().map(|n| param_id(n)).collect::<PyResult<_>>()?;
        let closure = dependents_closure(&ids, &self.inner).map_err(value_err)?;
        Ok(closure.into_iter().map(|id| id.to_string()).collect())
    }

    /// Registry defaults as a configuration.
    fn defaults(&self) -> Config {
        Config { inner: self.inner.defaults() }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, name: &str) -> bool {
        self.inner.lookup(name).is_some()
    }

    fn __repr__(&self) -> String {
        format!("Registry({} params)", self.inner.len())
    }
}

/// A flat key/value configuration.
#[pyclass(module = "cfgtest", skip_from_py_object)]
#[derive(Clone)]
pub struct Config {
    inner: ConfigStore,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (values=None))]
    fn new(values: Option<BTreeMap<String, String>>) -> PyResult<Self> {
        let mut inner = ConfigStore::default();
        for (k, v) in values.unwrap_or_default() {
            inner.set_value(&k, v).map_err(value_err)?;
        }
        Ok(Self { inner })
    }

    /// The bundled known-good demo configuration.
    #[staticmethod]
    fn demo() -> Self {
        Self { inner: demo::default_config() }
    }

    /// Parses properties text; duplicate keys keep the last value.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_properties(text).map(|p| Self { inner: p.store }).map_err(value_err)
    }

    fn serialize(&self) -> String {
        serialize_properties(&self.inner)
    }

    fn get(&self, key: &str) -> PyResult<Option<String>> {
        Ok(self.inner.get_raw(&param_id(key)?).map(str::to_string))
    }

    fn set(&mut self, key: &str, value: String) -> PyResult<()> {
        self.inner.set_value(key, value).map_err(value_err)
    }

    fn remove(&mut self, key: &str) -> PyResult<Option<String>> {
        Ok(self.inner.remove(&param_id(key)?))
    }

    fn to_dict(&self) -> BTreeMap<String, String> {
        self.inner.entries().iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    /// Diff JSON with `changed`, `added` and `removed`.
    fn diff(&self, other: &Config) -> PyResult<String> {
        json(&DiffReport {
            schema_version: cfgtest::harness::SCHEMA_VERSION,
            diff: compute_diff(&self.inner, &other.inner),
        })
    }

    /// Schema-only validation: `(param, kind)` pairs.
    fn validate(&self, registry: &Registry) -> Vec<(String, String)> {
        baseline_validate(&self.inner, &registry.inner)
            .into_iter()
            .map(|v| {
                let kind = serde_json::to_value(v.kind).ok().and_then(|k| k.as_str().map(str::to_string));
                (v.param.to_string(), kind.unwrap_or_default())
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Config) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Config({} entries)", self.inner.len())
    }
}

/// The demo test suite bound to a registry.
#[pyclass(module = "cfgtest", frozen)]
pub struct DemoSuite {
    harness: Harness,
}

impl DemoSuite {
    fn analysis(&self, config: &Config, policy: &str) -> PyResult<cfgtest::report::Analysis> {
        analyze(&self.harness, &config.inner, &parse_policy(policy)?).map_err(runtime_err)
    }
}

#[pymethods]
impl DemoSuite {
    #[new]
    #[pyo3(signature = (registry=None, timeout_ms=30_000, parallel=false))]
    fn new(registry: Option<&Registry>, timeout_ms: u64, parallel: bool) -> Self {
        let registry = registry.map_or_else(demo::demo_registry, |r| r.inner.clone());
        let options = RunOptions { timeout: Duration::from_millis(timeout_ms), parallel, verify_traces: false };
        Self { harness: demo::demo_harness_with(registry).with_options(options) }
    }

    fn test_ids(&self) -> Vec<String> {
        self.harness.test_ids()
    }

    /// Runs the whole suite concretized with `config`; returns the report JSON.
    #[pyo3(signature = (config, policy="get-only"))]
    fn run(&self, py: Python<'_>, config: &Config, policy: &str) -> PyResult<String> {
        let policy = parse_policy(policy)?;
        let store = config.inner.clone();
        let report = py.detach(|| self.harness.run_suite(&store, &policy).into_complete()).map_err(runtime_err)?;
        json(&report)
    }

    /// Coverage map JSON, suitable for `select`.
    #[pyo3(signature = (config, policy="get-only"))]
    fn coverage(&self, config: &Config, policy: &str) -> PyResult<String> {
        json(&self.analysis(config, policy)?.coverage_file())
    }

    /// Coverage statistics JSON.
    #[pyo3(signature = (config, policy="get-only"))]
    fn coverage_stats(&self, config: &Config, policy: &str) -> PyResult<String> {
        json(&self.analysis(config, policy)?.coverage_report())
    }

    /// Tests affected by the diff between `old` and `new`.
    fn select(&self, old: &Config, new: &Config, coverage_json: &str) -> PyResult<String> {
        let file = CoverageFile::from_json(coverage_json).map_err(value_err)?;
        let suite = self.harness.test_ids();
        let diff = compute_diff(&old.inner, &new.inner);
        let selection = select_tests(&diff, &file.to_map(), self.harness.registry(), &suite).map_err(value_err)?;
        json(&SelectionReport::new(diff, selection, suite.len(), file.staleness(&suite)))
    }

    /// Scores the suite on `budget` generated mutants of `config`.
    #[pyo3(signature = (config, budget=45, seed=0, policy="get-only"))]
    fn evaluate(&self, py: Python<'_>, config: &Config, budget: usize, seed: u64, policy: &str) -> PyResult<String> {
        let policy = parse_policy(policy)?;
        let good = config.inner.clone();
        let report = py.detach(|| -> Result<_, QualityError> {
            let analysis = analyze(&self.harness, &good, &policy)?;
            let corpus = generate_corpus(&self.harness, &good, budget, seed)?;
            evaluate_quality(&self.harness, &analysis.calibration, &corpus, &analysis.coverage, &policy)
        });
        json(&report.map_err(quality_err)?)
    }
}

/// Applies one mutation operator to a value of parameter `name`.
#[pyfunction]
#[pyo3(signature = (registry, name, base, operator, seed=0))]
fn mutate(registry: &Registry, name: &str, base: &str, operator: &str, seed: u64) -> PyResult<String> {
    let spec = registry.inner.lookup(name).ok_or_else(|| PyKeyError::new_err(name.to_string()))?;
    quality::mutate(spec, base, parse_operator(operator)?, seed).map_err(value_err)
}

#[pyfunction]
fn operators() -> Vec<&'static str> {
    MutationOperator::ALL.iter().map(|op| op.name()).collect()
}

/// `"373/387 (96.4%)"`
#[pyfunction]
fn format_coverage(exercised: usize, total: usize) -> String {
    CoverageStats::from_counts(total, exercised, Vec::new()).summary()
}

#[pymodule]
#[pyo3(name = "cfgtest")]
fn cfgtest_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Registry>()?;
    m.add_class::<Config>()?;
    m.add_class::<DemoSuite>()?;
    m.add_function(wrap_pyfunction!(mutate, m)?)?;
    m.add_function(wrap_pyfunction!(operators, m)?)?;
    m.add_function(wrap_pyfunction!(format_coverage, m)?)?;
    m.add("SCHEMA_VERSION", cfgtest::harness::SCHEMA_VERSION)?;
    Ok(())
}
