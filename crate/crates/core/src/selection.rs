//! Incremental configuration testing: pick the tests a diff can affect.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::coverage::{dependents_closure, CoverageMap};
use crate::harness::{Calibration, ConcretizationPolicy, Harness, HarnessError, SuiteReport};
use crate::model::{ConfigDiff, ConfigStore, ModelError, ParamId, ParamRegistry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// In suite order.
    pub selected: Vec<String>,
    pub affected_params: BTreeSet<ParamId>,
    /// Selected tests as a fraction of the suite.
    pub reduction: f64,
}

impl SelectionResult {
    /// Fraction of the suite that does not need to run.
    pub fn savings(&self, suite_size: usize) -> f64 {
        if suite_size == 0 {
            0.0
        } else {
            1.0 - self.selected.len() as f64 / suite_size as f64
        }
    }
}

/// Selects every test covering a parameter in the diff's dependency closure.
///
/// Removed keys count as changes. Tests in `suite_order` that the coverage
/// map has never seen are selected whenever the diff is non-empty.
pub fn select_tests(
    diff: &ConfigDiff,
    covmap: &CoverageMap,
    registry: &ParamRegistry,
    suite_order: &[String],
) -> Result<SelectionResult, ModelError> {
    let affected = dependents_closure(&diff.keys(), registry)?;
    let selected: Vec<String> = if diff.is_empty() {
        Vec::new()
    } else {
        suite_order
            .iter()
            .filter(|test| !covmap.known_tests().contains(*test) || affected.iter().any(|p| covmap.covers(p, test)))
            .cloned()
            .collect()
    };
    let reduction = if suite_order.is_empty() { 0.0 } else { selected.len() as f64 / suite_order.len() as f64 };
    Ok(SelectionResult { selected, affected_params: affected, reduction })
}

/// Tests whose status differs between two full runs.
pub fn verdict_changes(old: &SuiteReport, new: &SuiteReport) -> BTreeSet<String> {
    let new_status = new.statuses();
    old.results.iter().filter(|r| new_status.get(&r.test_id) != Some(&r.status)).map(|r| r.test_id.clone()).collect()
}

/// Brute-force reference: run everything under both configurations and
/// report the tests whose verdict status changed.
pub fn selection_oracle(
    harness: &Harness,
    calibration: &Calibration,
    old: &ConfigStore,
    new: &ConfigStore,
    policy: &ConcretizationPolicy,
) -> Result<BTreeSet<String>, HarnessError> {
    let old_run = harness.run_calibrated(calibration, old, policy, None).into_complete()?;
    let new_run = harness.run_calibrated(calibration, new, policy, None).into_complete()?;
    Ok(verdict_changes(&old_run, &new_run))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::model::{compute_diff, register_params, DependencyKind, ParamSpec, ParamType};

    fn id(s: &str) -> ParamId {
        ParamId::new(s).unwrap()
    }

    fn registry() -> ParamRegistry {
        register_params(vec![
            ParamSpec::new(id("p"), ParamType::Int).depends_on(DependencyKind::Enables, id("q")),
            ParamSpec::new(id("q"), ParamType::Int),
            ParamSpec::new(id("r"), ParamType::Int),
        ])
        .unwrap()
    }

    fn covmap(entries: &[(&str, &[&str])], tests: &[&str]) -> CoverageMap {
        let entries: BTreeMap<ParamId, BTreeSet<String>> =
            entries.iter().map(|(p, ts)| (id(p), ts.iter().map(|t| t.to_string()).collect())).collect();
        CoverageMap::from_parts(entries, tests.iter().map(|t| t.to_string()).collect())
    }

    fn order(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn store(pairs: &[(&str, &str)]) -> ConfigStore {
        let mut s = ConfigStore::default();
        for (k, v) in pairs {
            s.set_value(k, *v).unwrap();
        }
        s
    }

    #[test]
    fn empty_diff_selects_nothing() {
        let map = covmap(&[("p", &["t1"])], &["t1", "t2"]);
        let r = select_tests(&ConfigDiff::default(), &map, &registry(), &order(&["t1", "t2"])).unwrap();
        assert!(r.selected.is_empty());
        assert_eq!(r.reduction, 0.0);
    }

    #[test]
    fn direct_mapping() {
        let reg =
            register_params(vec![ParamSpec::new(id("p"), ParamType::Int), ParamSpec::new(id("q"), ParamType::Int)])
                .unwrap();
        let map = covmap(&[("p", &["t1", "t2"]), ("q", &["t3"])], &["t1", "t2", "t3"]);
        let diff = compute_diff(&store(&[("p", "1")]), &store(&[("p", "2")]));
        let r = select_tests(&diff, &map, &reg, &order(&["t1", "t2", "t3"])).unwrap();
        assert_eq!(r.selected, order(&["t1", "t2"]));
        assert!((r.reduction - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dependents_pulled_in() {
        let map = covmap(&[("p", &["t1"]), ("q", &[])], &["t1", "t2"]);
        let diff = compute_diff(&store(&[("q", "1")]), &store(&[("q", "2")]));
        let r = select_tests(&diff, &map, &registry(), &order(&["t1", "t2"])).unwrap();
        assert_eq!(r.selected, order(&["t1"]));
        assert_eq!(r.affected_params, BTreeSet::from([id("p"), id("q")]));
    }

    #[test]
    fn removed_counts_and_order_follows_suite() {
        let map = covmap(&[("r", &["b", "a"])], &["a", "b", "c"]);
        let diff = compute_diff(&store(&[("r", "1")]), &store(&[]));
        let r = select_tests(&diff, &map, &registry(), &order(&["b", "c", "a"])).unwrap();
        assert_eq!(r.selected, order(&["b", "a"]));
    }

    #[test]
    fn unseen_tests_always_selected() {
        let map = covmap(&[("r", &["a"])], &["a", "b"]);
        let diff = compute_diff(&store(&[("p", "1")]), &store(&[("p", "2")]));
        let r = select_tests(&diff, &map, &registry(), &order(&["a", "b", "new"])).unwrap();
        assert_eq!(r.selected, order(&["new"]));
    }

    #[test]
    fn unknown_param_rejected() {
        let diff = compute_diff(&store(&[]), &store(&[("nope", "1")]));
        let err = select_tests(&diff, &CoverageMap::new(), &registry(), &[]).unwrap_err();
        assert_eq!(err, ModelError::UnknownParam(id("nope")));
    }
}
