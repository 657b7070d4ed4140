//! Configuration coverage: which tests exercise the deployed value of each
//! parameter, plus the parameter dependency closure used by selection.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::harness::AccessTrace;
use crate::model::{ModelError, ParamId, ParamRegistry};

/// Parameter to covering tests. A test covers a parameter when it reads it
/// without having pinned it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageMap {
    entries: BTreeMap<ParamId, BTreeSet<String>>,
    /// Every test that contributed a trace, covering or not.
    tests: BTreeSet<String>,
}

impl CoverageMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(entries: BTreeMap<ParamId, BTreeSet<String>>, tests: BTreeSet<String>) -> Self {
        let mut tests = tests;
        tests.extend(entries.values().flatten().cloned());
        Self { entries, tests }
    }

    /// Folds one trace in. Adding traces never removes pairs.
    pub fn add_trace(&mut self, trace: &AccessTrace, pinned: &BTreeSet<ParamId>) {
        self.tests.insert(trace.test_id.clone());
        for read in &trace.reads {
            if !pinned.contains(&read.param) {
                self.entries.entry(read.param.clone()).or_default().insert(trace.test_id.clone());
            }
        }
    }

    /// Union of two maps; associative and commutative.
    pub fn merge(&mut self, other: &CoverageMap) {
        self.tests.extend(other.tests.iter().cloned());
        for (param, tests) in &other.entries {
            self.entries.entry(param.clone()).or_default().extend(tests.iter().cloned());
        }
    }

    /// Adds empty entries for registered parameters nobody read.
    pub fn include_registry(&mut self, registry: &ParamRegistry) {
        for id in registry.ids() {
            self.entries.entry(id.clone()).or_default();
        }
    }

    pub fn tests_for(&self, param: &ParamId) -> Option<&BTreeSet<String>> {
        self.entries.get(param)
    }

    pub fn entries(&self) -> &BTreeMap<ParamId, BTreeSet<String>> {
        &self.entries
    }

    pub fn known_tests(&self) -> &BTreeSet<String> {
        &self.tests
    }

    pub fn covers(&self, param: &ParamId, test_id: &str) -> bool {
        self.entries.get(param).is_some_and(|t| t.contains(test_id))
    }

    /// Pairs as a flat set, handy for comparisons.
    pub fn pairs(&self) -> BTreeSet<(ParamId, String)> {
        self.entries.iter().flat_map(|(p, ts)| ts.iter().map(move |t| (p.clone(), t.clone()))).collect()
    }
}

pub fn build_coverage_map(traces: &[AccessTrace], pins: &BTreeMap<String, BTreeSet<ParamId>>) -> CoverageMap {
    let empty = BTreeSet::new();
    let mut map = CoverageMap::new();
    for trace in traces {
        map.add_trace(trace, pins.get(&trace.test_id).unwrap_or(&empty));
    }
    map
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub total_params: usize,
    pub exercised_params: usize,
    /// Percent, rounded half-up to one decimal.
    pub percentage: f64,
    pub uncovered: Vec<ParamId>,
}

impl CoverageStats {
    pub fn from_counts(total: usize, exercised: usize, uncovered: Vec<ParamId>) -> Self {
        Self {
            total_params: total,
            exercised_params: exercised,
            percentage: percent_tenths(exercised, total) as f64 / 10.0,
            uncovered,
        }
    }

    /// `373/387 (96.4%)`
    pub fn summary(&self) -> String {
        let tenths = percent_tenths(self.exercised_params, self.total_params);
        format!("{}/{} ({}.{}%)", self.exercised_params, self.total_params, tenths / 10, tenths % 10)
    }
}

/// exercised/total in tenths of a percent, rounded half-up with integer math.
pub fn percent_tenths(exercised: usize, total: usize) -> u64 {
    if total == 0 {
        return 0;
    }
    let (e, t) = (exercised as u64, total as u64);
    (e * 1000 + t / 2) / t
}

/// Counts registered parameters with at least one covering test.
pub fn coverage_stats(map: &CoverageMap, registry: &ParamRegistry) -> CoverageStats {
    let mut exercised = 0;
    let mut uncovered = Vec::new();
    for id in registry.ids() {
        if map.tests_for(id).is_some_and(|t| !t.is_empty()) {
            exercised += 1;
        } else {
            uncovered.push(id.clone());
        }
    }
    CoverageStats::from_counts(registry.len(), exercised, uncovered)
}

/// Reverse adjacency of the registry's dependency edges.
#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    dependents: BTreeMap<ParamId, BTreeSet<ParamId>>,
}

impl DependencyGraph {
    pub fn from_registry(registry: &ParamRegistry) -> Self {
        let mut dependents: BTreeMap<ParamId, BTreeSet<ParamId>> = BTreeMap::new();
        for edge in registry.edges() {
            dependents.entry(edge.dependee.clone()).or_default().insert(edge.dependent.clone());
        }
        Self { dependents }
    }

    pub fn dependents_of(&self, id: &ParamId) -> impl Iterator<Item = &ParamId> {
        self.dependents.get(id).into_iter().flatten()
    }

    /// `seeds` plus everything that transitively depends on one of them.
    pub fn closure(&self, seeds: impl IntoIterator<Item = ParamId>) -> BTreeSet<ParamId> {
        let mut out: BTreeSet<ParamId> = BTreeSet::new();
        let mut queue: VecDeque<ParamId> = VecDeque::new();
        for s in seeds {
            if out.insert(s.clone()) {
                queue.push_back(s);
            }
        }
        while let Some(next) = queue.pop_front() {
            for dep in self.dependents_of(&next) {
                if out.insert(dep.clone()) {
                    queue.push_back(dep.clone());
                }
            }
        }
        out
    }
}

pub fn dependents_closure(
    changed: &BTreeSet<ParamId>,
    registry: &ParamRegistry,
) -> Result<BTreeSet<ParamId>, ModelError> {
    if let Some(unknown) = changed.iter().find(|id| !registry.contains(id)) {
        return Err(ModelError::UnknownParam(unknown.clone()));
    }
    Ok(DependencyGraph::from_registry(registry).closure(changed.iter().cloned()))
}
