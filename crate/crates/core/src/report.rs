//! JSON artifacts written and read by the command-line tool.
//!
//! Every artifact carries `schema_version`. Anything that varies between two
//! runs on identical inputs (timings, timestamps) lives under `metadata`, so
//! [`strip_metadata`] yields a reproducible document.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::coverage::{build_coverage_map, coverage_stats, CoverageMap, CoverageStats};
use crate::harness::{
    Calibration, ConcretizationPolicy, Harness, HarnessError, RunMetadata, SuiteReport, TestClass, SCHEMA_VERSION,
};
use crate::model::{ConfigDiff, ConfigStore, ParamId};
use crate::quality::QualityReport;
use crate::selection::SelectionResult;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, ReportError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Removes every `metadata` member, at any depth.
pub fn strip_metadata(mut value: Value) -> Value {
    fn walk(v: &mut Value) {
        match v {
            Value::Object(map) => {
                map.remove("metadata");
                map.values_mut().for_each(walk);
            }
            Value::Array(items) => items.iter_mut().for_each(walk),
            _ => {}
        }
    }
    walk(&mut value);
    value
}

/// The persisted coverage map plus the suite it was computed for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageFile {
    pub schema_version: u32,
    pub suite: Vec<String>,
    pub coverage: BTreeMap<ParamId, Vec<String>>,
}

/// Tests added to or removed from the suite since a coverage file was written.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Staleness {
    pub added_tests: Vec<String>,
    pub removed_tests: Vec<String>,
}

impl Staleness {
    pub fn is_stale(&self) -> bool {
        !self.added_tests.is_empty() || !self.removed_tests.is_empty()
    }
}

impl CoverageFile {
    pub fn new(map: &CoverageMap, suite: &[String]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            suite: suite.to_vec(),
            coverage: map.entries().iter().map(|(p, ts)| (p.clone(), ts.iter().cloned().collect())).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let file: Self = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ReportError::SchemaVersion { found: file.schema_version });
        }
        Ok(file)
    }

    /// Every test in `suite` counts as known, so tests that covered nothing
    /// are not mistaken for new ones.
    pub fn to_map(&self) -> CoverageMap {
        let entries = self.coverage.iter().map(|(p, ts)| (p.clone(), ts.iter().cloned().collect())).collect();
        CoverageMap::from_parts(entries, self.suite.iter().cloned().collect())
    }

    pub fn staleness(&self, current: &[String]) -> Staleness {
        let recorded: BTreeSet<&String> = self.suite.iter().collect();
        let now: BTreeSet<&String> = current.iter().collect();
        Staleness {
            added_tests: current.iter().filter(|t| !recorded.contains(t)).cloned().collect(),
            removed_tests: self.suite.iter().filter(|t| !now.contains(t)).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub set: usize,
    pub get_only: usize,
}

impl ClassCounts {
    pub fn from_report(report: &SuiteReport) -> Self {
        let set = report.results.iter().filter(|r| r.class == TestClass::Set).count();
        Self { set, get_only: report.results.len() - set }
    }
}

/// Coverage statistics over a registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub schema_version: u32,
    pub summary: String,
    pub stats: CoverageStats,
    pub classes: ClassCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: u32,
    pub diff: ConfigDiff,
    pub suite_size: usize,
    #[serde(flatten)]
    pub selection: SelectionResult,
    pub savings: f64,
    #[serde(default)]
    pub staleness: Staleness,
}

impl SelectionReport {
    pub fn new(diff: ConfigDiff, selection: SelectionResult, suite_size: usize, staleness: Staleness) -> Self {
        let savings = selection.savings(suite_size);
        Self { schema_version: SCHEMA_VERSION, diff, suite_size, selection, savings, staleness }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub schema_version: u32,
    #[serde(flatten)]
    pub diff: ConfigDiff,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalMetadata {
    pub elapsed_ms: u64,
    pub generated_unix_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub seed: u64,
    pub budget: usize,
    pub coverage: CoverageReport,
    pub quality: QualityReport,
    pub metadata: EvalMetadata,
}

/// One calibrated run of the suite with its coverage.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub calibration: Calibration,
    pub report: SuiteReport,
    pub coverage: CoverageMap,
    pub stats: CoverageStats,
}

impl Analysis {
    pub fn coverage_report(&self) -> CoverageReport {
        CoverageReport {
            schema_version: SCHEMA_VERSION,
            summary: self.stats.summary(),
            stats: self.stats.clone(),
            classes: ClassCounts::from_report(&self.report),
        }
    }

    pub fn coverage_file(&self) -> CoverageFile {
        CoverageFile::new(&self.coverage, &self.report.suite_order())
    }

    pub fn metadata(&self) -> &RunMetadata {
        &self.report.metadata
    }
}

/// Calibrates, runs the suite against `actual` and derives coverage.
pub fn analyze(
    harness: &Harness,
    actual: &ConfigStore,
    policy: &ConcretizationPolicy,
) -> Result<Analysis, HarnessError> {
    let calibration = harness.calibrate();
    calibration.report.clone().into_complete()?;
    let report = harness.run_calibrated(&calibration, actual, policy, None).into_complete()?;
    let mut coverage = build_coverage_map(&report.traces, &calibration.pins);
    coverage.include_registry(harness.registry());
    let stats = coverage_stats(&coverage, harness.registry());
    Ok(Analysis { calibration, report, coverage, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn id(s: &str) -> ParamId {
        ParamId::new(s).unwrap()
    }

    #[test]
    fn strip_metadata_at_any_depth() {
        let v = json!({"a": 1, "metadata": {"t": 3}, "b": [{"metadata": 1, "c": 2}]});
        assert_eq!(strip_metadata(v), json!({"a": 1, "b": [{"c": 2}]}));
    }

    #[test]
    fn coverage_file_roundtrip_and_staleness() {
        let entries = BTreeMap::from([(id("p"), BTreeSet::from(["t1".to_string()]))]);
        let map = CoverageMap::from_parts(entries, BTreeSet::new());
        let suite = vec!["t1".to_string(), "t2".to_string()];
        let file = CoverageFile::new(&map, &suite);
        let text = to_json(&file).unwrap();
        let back = CoverageFile::from_json(&text).unwrap();
        assert_eq!(back, file);
        assert!(back.to_map().known_tests().contains("t2"));
        assert_eq!(back.to_map().pairs(), map.pairs());

        let st = back.staleness(&["t1".to_string(), "t3".to_string()]);
        assert_eq!(st.added_tests, vec!["t3".to_string()]);
        assert_eq!(st.removed_tests, vec!["t2".to_string()]);
        assert!(!back.staleness(&suite).is_stale());

        let wrong = text.replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(matches!(CoverageFile::from_json(&wrong), Err(ReportError::SchemaVersion { found: 9 })));
    }
}
