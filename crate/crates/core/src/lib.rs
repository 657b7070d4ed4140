//! Configuration testing.
//!
//! Instead of checking deployed configuration values against hand-written
//! rules, run the project's existing tests with those values plugged in and
//! let the code that consumes them decide. The crate provides:
//!
//! * [`model`] and [`io`]: typed parameters, raw stores, diffs, file formats
//! * [`harness`]: instrumented test execution with per-test access traces
//! * [`coverage`]: parameter to test mapping and dependency closure
//! * [`selection`]: incremental test selection for configuration diffs
//! * [`quality`]: mutation corpora, suite quality scoring, rule-based baseline
//! * [`demo`]: a small storage node with a test suite to run all of the above on

pub mod coverage;
pub mod demo;
pub mod harness;
pub mod io;
pub mod model;
pub mod quality;
pub mod report;
pub mod sandbox;
pub mod selection;

pub use harness::{
    check, classify_test, concretize, run_test, AccessTrace, Calibration, ConcretizationPolicy, Harness, HarnessError,
    RunOptions, Status, SuiteReport, TestCase, TestClass, TestContext, TestFailure, TestOutcome, Verdict,
};
pub use model::{
    compute_diff, register_params, typed_get, ConfigDiff, ConfigStore, DependencyEdge, DependencyKind, ModelError,
    ParamId, ParamRegistry, ParamSpec, ParamType, Provenance, TypedValue,
};
