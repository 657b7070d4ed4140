//! Runs tests against instrumented configuration handles.
//!
//! Every configuration read and write a test performs goes through
//! [`TestContext`], which records it into an [`AccessTrace`]. A suite run
//! first calibrates each test against its own defaults to learn which
//! parameters it sets (its pins), then reruns it with the deployed values
//! plugged in according to a [`ConcretizationPolicy`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConfigStore, ModelError, ParamId, ParamRegistry, Provenance, TypedValue};
use crate::sandbox::{resolve_in, Sandbox, SandboxSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("sandbox setup for {test_id} failed: {source}")]
    Sandbox {
        test_id: String,
        #[source]
        source: std::io::Error,
    },
    #[error("could not spawn test thread for {test_id}: {source}")]
    Spawn {
        test_id: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate test id {0}")]
    DuplicateTest(String),
    #[error("suite run incomplete: {0}")]
    Incomplete(String),
}

/// Why a test body did not pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TestFailure {
    /// An assertion in the test was violated.
    Assertion(String),
    /// The code under test raised a fault.
    Fault(String),
}

impl TestFailure {
    pub fn fault(err: impl fmt::Display) -> Self {
        TestFailure::Fault(err.to_string())
    }
}

impl From<ModelError> for TestFailure {
    fn from(err: ModelError) -> Self {
        TestFailure::Fault(err.to_string())
    }
}

impl From<std::io::Error> for TestFailure {
    fn from(err: std::io::Error) -> Self {
        TestFailure::Fault(format!("io: {err}"))
    }
}

pub type TestOutcome = Result<(), TestFailure>;

/// Fails the test with `msg` unless `cond` holds.
pub fn check(cond: bool, msg: impl Into<String>) -> TestOutcome {
    if cond {
        Ok(())
    } else {
        Err(TestFailure::Assertion(msg.into()))
    }
}

pub type TestBody = Arc<dyn Fn(&mut TestContext) -> TestOutcome + Send + Sync>;

#[derive(Clone)]
pub struct TestCase {
    pub id: String,
    /// Values the test starts from before its own `set` calls.
    pub conf: ConfigStore,
    pub tags: Vec<String>,
    body: TestBody,
}

impl fmt::Debug for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestCase").field("id", &self.id).field("tags", &self.tags).finish_non_exhaustive()
    }
}

impl TestCase {
    pub fn new<F>(id: impl Into<String>, body: F) -> Self
    where
        F: Fn(&mut TestContext) -> TestOutcome + Send + Sync + 'static,
    {
        Self { id: id.into(), conf: ConfigStore::default(), tags: Vec::new(), body: Arc::new(body) }
    }

    pub fn with_conf(mut self, conf: ConfigStore) -> Self {
        self.conf = conf.with_provenance(Provenance::TestDefault);
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tags.push(tag.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueSource {
    /// Supplied by the deployed configuration.
    Deployed,
    /// From the test's own configuration or one of its writes.
    Test,
    /// Registry default.
    Default,
    /// No value and no default, or unregistered.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadEvent {
    pub param: ParamId,
    pub value: Option<String>,
    pub source: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteEvent {
    pub param: ParamId,
    pub value: String,
    /// False when the deployed value took precedence.
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AccessTrace {
    pub test_id: String,
    pub reads: Vec<ReadEvent>,
    pub writes: Vec<WriteEvent>,
    /// Keys seen by the shadow recorder, present only when trace verification is on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow: Option<Vec<String>>,
}

impl AccessTrace {
    pub fn new(test_id: impl Into<String>) -> Self {
        Self { test_id: test_id.into(), ..Self::default() }
    }

    pub fn read_params(&self) -> BTreeSet<ParamId> {
        self.reads.iter().map(|r| r.param.clone()).collect()
    }

    pub fn written_params(&self) -> BTreeSet<ParamId> {
        self.writes.iter().map(|w| w.param.clone()).collect()
    }

    /// Parameter set seen by the shadow recorder, if it ran.
    pub fn shadow_params(&self) -> Option<BTreeSet<String>> {
        self.shadow.as_ref().map(|keys| keys.iter().cloned().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestClass {
    Set,
    GetOnly,
}

pub fn classify_test(trace: &AccessTrace) -> TestClass {
    if trace.writes.is_empty() {
        TestClass::GetOnly
    } else {
        TestClass::Set
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    /// Fail and error both count as the test catching something.
    pub fn is_detection(self) -> bool {
        !matches!(self, Status::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub detail: String,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ConcretizationPolicy {
    ReplaceAll,
    #[default]
    ReplaceGetOnly,
    ReplaceListed(BTreeSet<ParamId>),
}

impl ConcretizationPolicy {
    pub fn listed(params: impl IntoIterator<Item = ParamId>) -> Option<Self> {
        let set: BTreeSet<ParamId> = params.into_iter().collect();
        (!set.is_empty()).then_some(ConcretizationPolicy::ReplaceListed(set))
    }

    /// Keys of `actual` that override the test's values.
    pub fn overridden_keys(&self, actual: &ConfigStore, pinned: &BTreeSet<ParamId>) -> BTreeSet<ParamId> {
        actual
            .keys()
            .filter(|k| match self {
                ConcretizationPolicy::ReplaceAll => true,
                ConcretizationPolicy::ReplaceGetOnly => !pinned.contains(*k),
                ConcretizationPolicy::ReplaceListed(set) => set.contains(*k),
            })
            .cloned()
            .collect()
    }
}

impl fmt::Display for ConcretizationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConcretizationPolicy::ReplaceAll => f.write_str("all"),
            ConcretizationPolicy::ReplaceGetOnly => f.write_str("get-only"),
            ConcretizationPolicy::ReplaceListed(set) => {
                let names: Vec<&str> = set.iter().map(ParamId::as_str).collect();
                write!(f, "listed={}", names.join(","))
            }
        }
    }
}

impl FromStr for ConcretizationPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(ConcretizationPolicy::ReplaceAll),
            "get-only" => Ok(ConcretizationPolicy::ReplaceGetOnly),
            _ => {
                let list = s.strip_prefix("listed=").ok_or_else(|| format!("unknown policy {s:?}"))?;
                let ids = list
                    .split(',')
                    .filter(|p| !p.is_empty())
                    .map(ParamId::new)
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?;
                ConcretizationPolicy::listed(ids).ok_or_else(|| "listed policy needs at least one parameter".into())
            }
        }
    }
}

/// Plugs deployed values into a test's configuration.
pub fn concretize(
    test_conf: &ConfigStore,
    actual: &ConfigStore,
    policy: &ConcretizationPolicy,
    pinned: &BTreeSet<ParamId>,
) -> ConfigStore {
    let mut out = test_conf.clone().with_provenance(Provenance::Deployed);
    for key in policy.overridden_keys(actual, pinned) {
        if let Some(raw) = actual.get_raw(&key) {
            out.insert(key, raw);
        }
    }
    out
}

struct Recorder {
    trace: AccessTrace,
}

/// Instrumented configuration handle passed to test bodies.
pub struct TestContext {
    store: ConfigStore,
    locked: BTreeSet<ParamId>,
    registry: Arc<ParamRegistry>,
    root: PathBuf,
    recorder: Arc<Mutex<Recorder>>,
    shadow: Option<Arc<Mutex<Vec<String>>>>,
}

impl TestContext {
    pub fn get(&mut self, key: &str) -> Result<TypedValue, TestFailure> {
        if let Some(shadow) = &self.shadow {
            shadow.lock().expect("shadow log poisoned").push(key.to_string());
        }
        let id = ParamId::new(key)?;
        let spec = self.registry.get(&id);
        let (value, source) = match (self.store.get_raw(&id), spec.and_then(|s| s.default.as_deref())) {
            (Some(raw), _) if self.locked.contains(&id) => (Some(raw.to_string()), ValueSource::Deployed),
            (Some(raw), _) => (Some(raw.to_string()), ValueSource::Test),
            (None, Some(default)) => (Some(default.to_string()), ValueSource::Default),
            (None, None) => (None, ValueSource::Missing),
        };
        self.recorder.lock().expect("recorder poisoned").trace.reads.push(ReadEvent {
            param: id.clone(),
            value,
            source,
        });
        Ok(crate::model::typed_get(&self.store, &self.registry, &id)?)
    }

    /// Writes a raw value. Intercepted when the deployed value owns the key.
    pub fn set(&mut self, key: &str, raw: impl Into<String>) -> TestOutcome {
        let id = ParamId::new(key)?;
        let raw = raw.into();
        let applied = !self.locked.contains(&id);
        self.recorder.lock().expect("recorder poisoned").trace.writes.push(WriteEvent {
            param: id.clone(),
            value: raw.clone(),
            applied,
        });
        if applied {
            self.store.insert(id, raw);
        }
        Ok(())
    }

    pub fn get_bool(&mut self, key: &str) -> Result<bool, TestFailure> {
        match self.get(key)? {
            TypedValue::Bool(v) => Ok(v),
            other => Err(wrong_type(key, "bool", &other)),
        }
    }

    pub fn get_int(&mut self, key: &str) -> Result<i64, TestFailure> {
        match self.get(key)? {
            TypedValue::Int(v) => Ok(v),
            other => Err(wrong_type(key, "int", &other)),
        }
    }

    pub fn get_float(&mut self, key: &str) -> Result<f64, TestFailure> {
        match self.get(key)? {
            TypedValue::Float(v) => Ok(v),
            other => Err(wrong_type(key, "float", &other)),
        }
    }

    pub fn get_duration(&mut self, key: &str) -> Result<Duration, TestFailure> {
        match self.get(key)? {
            TypedValue::DurationMs(v) => Ok(Duration::from_millis(v)),
            other => Err(wrong_type(key, "duration-ms", &other)),
        }
    }

    pub fn get_port(&mut self, key: &str) -> Result<u16, TestFailure> {
        match self.get(key)? {
            TypedValue::Port(v) => Ok(v),
            other => Err(wrong_type(key, "port", &other)),
        }
    }

    pub fn get_string(&mut self, key: &str) -> Result<String, TestFailure> {
        match self.get(key)? {
            TypedValue::Str(v) | TypedValue::Enum(v) => Ok(v),
            other => Err(wrong_type(key, "string", &other)),
        }
    }

    /// Reads a path parameter, resolving `@sandbox/` paths to the live sandbox.
    pub fn get_path(&mut self, key: &str) -> Result<PathBuf, TestFailure> {
        match self.get(key)? {
            TypedValue::Path(p) => Ok(resolve_in(&self.root, &p)),
            other => Err(wrong_type(key, "path", &other)),
        }
    }

    pub fn sandbox_root(&self) -> &Path {
        &self.root
    }

    pub fn registry(&self) -> &ParamRegistry {
        &self.registry
    }
}

fn wrong_type(key: &str, want: &str, got: &TypedValue) -> TestFailure {
    TestFailure::Fault(format!("{key}: expected {want}, registry type yields {got:?}"))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub timeout: Duration,
    pub parallel: bool,
    /// Runs the shadow recorder next to the primary one.
    pub verify_traces: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { timeout: DEFAULT_TIMEOUT, parallel: false, verify_traces: false }
    }
}

/// Runs one test on `store` with nothing locked.
pub fn run_test(
    test: &TestCase,
    store: &ConfigStore,
    registry: &Arc<ParamRegistry>,
    sandbox: &SandboxSpec,
    options: &RunOptions,
) -> Result<(Verdict, AccessTrace), HarnessError> {
    run_test_locked(test, store, &BTreeSet::new(), registry, sandbox, options)
}

/// Runs one test; writes to `locked` keys are recorded but not applied.
pub fn run_test_locked(
    test: &TestCase,
    store: &ConfigStore,
    locked: &BTreeSet<ParamId>,
    registry: &Arc<ParamRegistry>,
    sandbox: &SandboxSpec,
    options: &RunOptions,
) -> Result<(Verdict, AccessTrace), HarnessError> {
    let sandbox = Sandbox::create(sandbox, store, registry)
        .map_err(|source| HarnessError::Sandbox { test_id: test.id.clone(), source })?;
    let recorder = Arc::new(Mutex::new(Recorder { trace: AccessTrace::new(&test.id) }));
    let shadow = options.verify_traces.then(|| Arc::new(Mutex::new(Vec::new())));
    let mut ctx = TestContext {
        store: store.clone(),
        locked: locked.clone(),
        registry: Arc::clone(registry),
        root: sandbox.root().to_path_buf(),
        recorder: Arc::clone(&recorder),
        shadow: shadow.clone(),
    };
    let body = Arc::clone(&test.body);
    let (tx, rx) = mpsc::channel();
    let start = Instant::now();
    thread::Builder::new()
        .name(format!("test:{}", test.id))
        .spawn(move || {
            let outcome = panic::catch_unwind(AssertUnwindSafe(|| body(&mut ctx)));
            let _ = tx.send(outcome);
        })
        .map_err(|source| HarnessError::Spawn { test_id: test.id.clone(), source })?;

    let (status, detail) = match rx.recv_timeout(options.timeout) {
        Ok(Ok(Ok(()))) => (Status::Pass, String::new()),
        Ok(Ok(Err(TestFailure::Assertion(msg)))) => (Status::Fail, msg),
        Ok(Ok(Err(TestFailure::Fault(msg)))) => (Status::Error, msg),
        Ok(Err(payload)) => (Status::Error, format!("panicked: {}", panic_message(&payload))),
        Err(mpsc::RecvTimeoutError::Timeout) => {
            (Status::Error, format!("timed out after {} ms", options.timeout.as_millis()))
        }
        Err(mpsc::RecvTimeoutError::Disconnected) => (Status::Error, "test thread vanished".to_string()),
    };
    let duration_ms = start.elapsed().as_millis() as u64;
    drop(sandbox);

    let mut trace = recorder.lock().map(|r| r.trace.clone()).unwrap_or_else(|p| p.into_inner().trace.clone());
    if let Some(shadow) = shadow {
        trace.shadow = Some(shadow.lock().map(|s| s.clone()).unwrap_or_else(|p| p.into_inner().clone()));
    }
    Ok((Verdict { status, detail, duration_ms }, trace))
}

fn panic_message(payload: &Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_id: String,
    pub status: Status,
    pub detail: String,
    pub class: TestClass,
    pub pinned: Vec<ParamId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
}

/// Run-dependent values kept apart so the rest of a report is reproducible.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunMetadata {
    pub durations_ms: BTreeMap<String, u64>,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub policy: String,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub summary: Summary,
    pub results: Vec<TestResult>,
    pub traces: Vec<AccessTrace>,
    pub metadata: RunMetadata,
}

impl SuiteReport {
    fn empty(policy: &ConcretizationPolicy) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            policy: policy.to_string(),
            complete: true,
            error: None,
            summary: Summary::default(),
            results: Vec::new(),
            traces: Vec::new(),
            metadata: RunMetadata::default(),
        }
    }

    fn push(&mut self, result: TestResult, trace: AccessTrace, duration_ms: u64) {
        self.summary.total += 1;
        match result.status {
            Status::Pass => self.summary.passed += 1,
            Status::Fail => self.summary.failed += 1,
            Status::Error => self.summary.errored += 1,
        }
        self.metadata.durations_ms.insert(result.test_id.clone(), duration_ms);
        self.results.push(result);
        self.traces.push(trace);
    }

    /// Turns an aborted run into an error.
    pub fn into_complete(self) -> Result<Self, HarnessError> {
        if self.complete {
            Ok(self)
        } else {
            Err(HarnessError::Incomplete(self.error.unwrap_or_default()))
        }
    }

    pub fn all_passed(&self) -> bool {
        self.complete && self.summary.passed == self.summary.total
    }

    pub fn status_of(&self, test_id: &str) -> Option<Status> {
        self.results.iter().find(|r| r.test_id == test_id).map(|r| r.status)
    }

    pub fn statuses(&self) -> BTreeMap<String, Status> {
        self.results.iter().map(|r| (r.test_id.clone(), r.status)).collect()
    }

    pub fn detections(&self) -> Vec<&TestResult> {
        self.results.iter().filter(|r| r.status.is_detection()).collect()
    }

    pub fn pins(&self) -> BTreeMap<String, BTreeSet<ParamId>> {
        self.results.iter().map(|r| (r.test_id.clone(), r.pinned.iter().cloned().collect())).collect()
    }

    pub fn suite_order(&self) -> Vec<String> {
        self.results.iter().map(|r| r.test_id.clone()).collect()
    }
}

/// Outcome of running every test against its own configuration.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub pins: BTreeMap<String, BTreeSet<ParamId>>,
    pub report: SuiteReport,
}

impl Calibration {
    pub fn pins_for(&self, test_id: &str) -> BTreeSet<ParamId> {
        self.pins.get(test_id).cloned().unwrap_or_default()
    }
}

/// A test suite bound to a registry and a sandbox template.
#[derive(Clone)]
pub struct Harness {
    tests: Vec<TestCase>,
    registry: Arc<ParamRegistry>,
    sandbox: SandboxSpec,
    pub options: RunOptions,
}

impl Harness {
    pub fn new(tests: Vec<TestCase>, registry: ParamRegistry, sandbox: SandboxSpec) -> Result<Self, HarnessError> {
        let mut seen = BTreeSet::new();
        for t in &tests {
            if !seen.insert(t.id.as_str()) {
                return Err(HarnessError::DuplicateTest(t.id.clone()));
            }
        }
        Ok(Self { tests, registry: Arc::new(registry), sandbox, options: RunOptions::default() })
    }

    pub fn with_options(mut self, options: RunOptions) -> Self {
        self.options = options;
        self
    }

    pub fn tests(&self) -> &[TestCase] {
        &self.tests
    }

    pub fn test_ids(&self) -> Vec<String> {
        self.tests.iter().map(|t| t.id.clone()).collect()
    }

    pub fn registry(&self) -> &ParamRegistry {
        &self.registry
    }

    pub fn sandbox(&self) -> &SandboxSpec {
        &self.sandbox
    }

    pub fn run_one(&self, test: &TestCase, store: &ConfigStore) -> Result<(Verdict, AccessTrace), HarnessError> {
        run_test(test, store, &self.registry, &self.sandbox, &self.options)
    }

    /// Runs every test un-concretized and records what each one sets.
    pub fn calibrate(&self) -> Calibration {
        let report = self.execute(
            &self.tests.iter().collect::<Vec<_>>(),
            &ConcretizationPolicy::ReplaceGetOnly,
            |test| (test.conf.clone(), BTreeSet::new()),
            |_| None,
        );
        let pins = report.traces.iter().map(|t| (t.test_id.clone(), t.written_params())).collect();
        Calibration { pins, report }
    }

    /// Calibrates, then runs the whole suite concretized with `actual`.
    pub fn run_suite(&self, actual: &ConfigStore, policy: &ConcretizationPolicy) -> SuiteReport {
        let calibration = self.calibrate();
        if !calibration.report.complete {
            let mut report = calibration.report;
            report.policy = policy.to_string();
            return report;
        }
        self.run_calibrated(&calibration, actual, policy, None)
    }

    /// Runs the suite (or the tests in `only`, kept in suite order) with known pins.
    pub fn run_calibrated(
        &self,
        calibration: &Calibration,
        actual: &ConfigStore,
        policy: &ConcretizationPolicy,
        only: Option<&BTreeSet<String>>,
    ) -> SuiteReport {
        let tests: Vec<&TestCase> = self.tests.iter().filter(|t| only.is_none_or(|set| set.contains(&t.id))).collect();
        self.execute(
            &tests,
            policy,
            |test| {
                let pinned = calibration.pins_for(&test.id);
                let store = concretize(&test.conf, actual, policy, &pinned);
                let locked = policy.overridden_keys(actual, &pinned);
                (store, locked)
            },
            |test| Some(calibration.pins_for(&test.id).into_iter().collect()),
        )
    }

    fn execute<P, Q>(&self, tests: &[&TestCase], policy: &ConcretizationPolicy, prepare: P, pins: Q) -> SuiteReport
    where
        P: Fn(&TestCase) -> (ConfigStore, BTreeSet<ParamId>) + Sync,
        Q: Fn(&TestCase) -> Option<Vec<ParamId>>,
    {
        let started = Instant::now();
        let run = |test: &&TestCase| {
            let (store, locked) = prepare(test);
            run_test_locked(test, &store, &locked, &self.registry, &self.sandbox, &self.options)
        };
        let outcomes: Vec<Result<(Verdict, AccessTrace), HarnessError>> = if self.options.parallel {
            tests.par_iter().map(run).collect()
        } else {
            let mut out = Vec::with_capacity(tests.len());
            for test in tests {
                let outcome = run(test);
                let failed = outcome.is_err();
                out.push(outcome);
                if failed {
                    break;
                }
            }
            out
        };

        let mut report = SuiteReport::empty(policy);
        for (test, outcome) in tests.iter().zip(outcomes) {
            match outcome {
                Ok((verdict, trace)) => {
                    // pins come from the calibration run when known, else from this run's writes
                    let pinned = pins(test).unwrap_or_else(|| trace.written_params().into_iter().collect());
                    let result = TestResult {
                        test_id: test.id.clone(),
                        status: verdict.status,
                        detail: verdict.detail,
                        class: classify_test(&trace),
                        pinned,
                    };
                    report.push(result, trace, verdict.duration_ms);
                }
                Err(err) => {
                    report.complete = false;
                    report.error = Some(err.to_string());
                    break;
                }
            }
        }
        report.metadata.elapsed_ms = started.elapsed().as_millis() as u64;
        report
    }
}
