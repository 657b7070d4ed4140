//! Suite quality against injected misconfigurations.
//!
//! A corpus holds the known-good configuration plus single-parameter mutants
//! produced by a fixed set of constraint-aware operators. Each mutant is
//! checked two ways: by running the tests selected for its diff, and by a
//! rule-based validator that only knows what the parameter schema says.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::CoverageMap;
use crate::harness::{Calibration, ConcretizationPolicy, Harness, HarnessError, SCHEMA_VERSION};
use crate::io::{parse_properties, serialize_properties, IoError};
use crate::model::{
    compute_diff, ConfigStore, ModelError, ParamId, ParamRegistry, ParamSpec, ParamType, Provenance, TypeKind,
};
use crate::sandbox::{CORRUPT_DIR, DENY_DIR, MISSING_DIR, SANDBOX_PREFIX};
use crate::selection::select_tests;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("operator {operator} does not apply to {param} ({ty})")]
    InapplicableOperator { operator: MutationOperator, param: ParamId, ty: ParamType },
    #[error("seed configuration fails the suite: {}", failing.join(", "))]
    SeedConfigFails { failing: Vec<String> },
    #[error("corpus has no configuration labeled good")]
    NoGoodConfig,
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("corpus directory: {0}")]
    Fs(#[from] std::io::Error),
    #[error("corpus index: {0}")]
    Index(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationOperator {
    /// A token that does not parse as the declared type.
    TypeBreak,
    /// One past a declared bound.
    RangeBreak,
    NonexistentPath,
    PermissionDeny,
    WrongContentFile,
    EnumInvalid,
    /// Multiplies by 1000, the seconds/milliseconds confusion.
    UnitScale,
    EmptyValue,
    WhitespacePad,
}

impl MutationOperator {
    pub const ALL: [MutationOperator; 9] = [
        MutationOperator::TypeBreak,
        MutationOperator::RangeBreak,
        MutationOperator::NonexistentPath,
        MutationOperator::PermissionDeny,
        MutationOperator::WrongContentFile,
        MutationOperator::EnumInvalid,
        MutationOperator::UnitScale,
        MutationOperator::EmptyValue,
        MutationOperator::WhitespacePad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MutationOperator::TypeBreak => "type-break",
            MutationOperator::RangeBreak => "range-break",
            MutationOperator::NonexistentPath => "nonexistent-path",
            MutationOperator::PermissionDeny => "permission-deny",
            MutationOperator::WrongContentFile => "wrong-content-file",
            MutationOperator::EnumInvalid => "enum-invalid",
            MutationOperator::UnitScale => "unit-scale",
            MutationOperator::EmptyValue => "empty-value",
            MutationOperator::WhitespacePad => "whitespace-pad",
        }
    }

    pub fn applies_to(self) -> &'static [TypeKind] {
        use TypeKind::*;
        match self {
            MutationOperator::TypeBreak => &[Int, Float, Bool, Port, DurationMs],
            MutationOperator::RangeBreak => &[Port, DurationMs],
            MutationOperator::NonexistentPath
            | MutationOperator::PermissionDeny
            | MutationOperator::WrongContentFile => &[Path],
            MutationOperator::EnumInvalid => &[Enum],
            MutationOperator::UnitScale => &[Int, DurationMs],
            MutationOperator::EmptyValue | MutationOperator::WhitespacePad => {
                &[String, Int, Float, Bool, Path, DurationMs, Enum, Port]
            }
        }
    }

    pub fn applicable(self, ty: &ParamType) -> bool {
        self.applies_to().contains(&ty.kind())
    }
}

impl fmt::Display for MutationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sandbox-relative part of a path value, with any marker prefix removed.
fn sandbox_relative(base: &str) -> String {
    match base.strip_prefix(SANDBOX_PREFIX) {
        Some(rel) => {
            for marker in [DENY_DIR, CORRUPT_DIR, MISSING_DIR] {
                if let Some(rest) = rel.strip_prefix(marker).and_then(|r| r.strip_prefix('/')) {
                    return rest.to_string();
                }
            }
            rel.to_string()
        }
        None => Path::new(base.trim())
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "target".to_string()),
    }
}

/// Mutates `base` for `spec`. Deterministic in all inputs; never returns `base`.
pub fn mutate(spec: &ParamSpec, base: &str, op: MutationOperator, seed: u64) -> Result<String, QualityError> {
    let inapplicable =
        || QualityError::InapplicableOperator { operator: op, param: spec.id.clone(), ty: spec.ty.clone() };
    if !op.applicable(&spec.ty) {
        return Err(inapplicable());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match op {
        MutationOperator::TypeBreak => {
            let tokens: &[&str] = match spec.ty {
                ParamType::Bool => &["yes", "1", "TRUE", "enabled"],
                ParamType::Float => &["not-a-number", "1,5", "0x1p3", "12abc"],
                _ => &["not-a-number", "3.5", "0x1F", "12abc"],
            };
            let start = rng.gen_range(0..tokens.len());
            (0..tokens.len())
                .map(|i| tokens[(start + i) % tokens.len()])
                .find(|t| *t != base && spec.ty.parse(t).is_none())
                .ok_or_else(inapplicable)?
                .to_string()
        }
        MutationOperator::RangeBreak => match spec.ty {
            ParamType::Port => "65536".to_string(),
            ParamType::DurationMs => "-1".to_string(),
            _ => return Err(inapplicable()),
        },
        MutationOperator::NonexistentPath => format!("{SANDBOX_PREFIX}{MISSING_DIR}/{:016x}", rng.gen::<u64>()),
        MutationOperator::PermissionDeny => format!("{SANDBOX_PREFIX}{DENY_DIR}/{}", sandbox_relative(base)),
        MutationOperator::WrongContentFile => format!("{SANDBOX_PREFIX}{CORRUPT_DIR}/{}", sandbox_relative(base)),
        MutationOperator::EnumInvalid => {
            let ParamType::Enum(variants) = &spec.ty else {
                return Err(inapplicable());
            };
            let pick = &variants[rng.gen_range(0..variants.len())];
            let candidates = [pick.to_uppercase(), format!("{pick}-x"), format!("{pick}s")];
            let start = rng.gen_range(0..candidates.len());
            (0..candidates.len())
                .map(|i| &candidates[(start + i) % candidates.len()])
                .find(|c| c.as_str() != base && !variants.contains(c))
                .ok_or_else(inapplicable)?
                .clone()
        }
        MutationOperator::UnitScale => match spec.ty.parse(base) {
            Some(crate::model::TypedValue::Int(v)) => v.checked_mul(1000).ok_or_else(inapplicable)?.to_string(),
            Some(crate::model::TypedValue::DurationMs(v)) => v.checked_mul(1000).ok_or_else(inapplicable)?.to_string(),
            _ => return Err(inapplicable()),
        },
        MutationOperator::EmptyValue => String::new(),
        MutationOperator::WhitespacePad => {
            let forms = [format!(" {base}"), format!("{base} "), format!(" {base} "), format!("\t{base}")];
            forms[rng.gen_range(0..forms.len())].clone()
        }
    };
    if out == base {
        return Err(inapplicable());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Bad,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledConfig {
    pub store: ConfigStore,
    pub label: Label,
    pub mutated_param: Option<ParamId>,
    pub operator: Option<MutationOperator>,
}

impl LabeledConfig {
    pub fn good(store: ConfigStore) -> Self {
        Self { store, label: Label::Good, mutated_param: None, operator: None }
    }

    pub fn mutated_value(&self) -> Option<&str> {
        self.mutated_param.as_ref().and_then(|p| self.store.get_raw(p))
    }
}

/// The good configuration followed by up to `budget` single-parameter mutants.
///
/// Parameters are visited round-robin, each taking its next applicable
/// operator per round. `seed` rotates both orders and feeds the operators.
pub fn enumerate_mutants(registry: &ParamRegistry, good: &ConfigStore, budget: usize, seed: u64) -> Vec<LabeledConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plans: Vec<(&ParamSpec, String, Vec<MutationOperator>)> = Vec::new();
    for spec in registry.specs() {
        let Some(base) = good.get_raw(&spec.id).or(spec.default.as_deref()) else {
            continue;
        };
        let mut ops: Vec<MutationOperator> =
            MutationOperator::ALL.into_iter().filter(|op| op.applicable(&spec.ty)).collect();
        if ops.is_empty() {
            continue;
        }
        let shift = rng.gen_range(0..ops.len());
        ops.rotate_left(shift);
        plans.push((spec, base.to_string(), ops));
    }
    if !plans.is_empty() {
        let shift = rng.gen_range(0..plans.len());
        plans.rotate_left(shift);
    }

    let mut corpus = vec![LabeledConfig::good(good.clone())];
    let mut seen: BTreeSet<(ParamId, String)> = BTreeSet::new();
    let rounds = plans.iter().map(|(_, _, ops)| ops.len()).max().unwrap_or(0);
    'outer: for round in 0..rounds {
        for (spec, base, ops) in &plans {
            if corpus.len() > budget {
                break 'outer;
            }
            let Some(&op) = ops.get(round) else { continue };
            let op_seed = rng.gen::<u64>();
            let Ok(value) = mutate(spec, base, op, op_seed) else { continue };
            if !seen.insert((spec.id.clone(), value.clone())) {
                continue;
            }
            let mut store = good.clone().with_provenance(Provenance::Mutated);
            store.insert(spec.id.clone(), value);
            corpus.push(LabeledConfig {
                store,
                label: Label::Bad,
                mutated_param: Some(spec.id.clone()),
                operator: Some(op),
            });
        }
    }
    corpus
}

/// Checks that `good` passes the whole suite, then enumerates mutants.
pub fn generate_corpus(
    harness: &Harness,
    good: &ConfigStore,
    budget: usize,
    seed: u64,
) -> Result<Vec<LabeledConfig>, QualityError> {
    let report = harness.run_suite(good, &ConcretizationPolicy::default()).into_complete()?;
    if !report.all_passed() {
        let failing = report.detections().iter().map(|r| r.test_id.clone()).collect();
        return Err(QualityError::SeedConfigFails { failing });
    }
    Ok(enumerate_mutants(harness.registry(), good, budget, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Type,
    Range,
    Format,
    Enum,
    Empty,
    UnknownParam,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub param: ParamId,
    pub kind: ViolationKind,
    pub value: Option<String>,
}

/// Rule-based validation from the schema alone: declared type, port and
/// duration ranges, enum membership, non-empty, no surrounding whitespace.
/// File contents and program behavior are never inspected.
pub fn baseline_validate(store: &ConfigStore, registry: &ParamRegistry) -> Vec<Violation> {
    let mut out = Vec::new();
    for spec in registry.specs() {
        let raw = store.get_raw(&spec.id).or(spec.default.as_deref());
        let violation = |kind| Violation { param: spec.id.clone(), kind, value: raw.map(str::to_string) };
        let Some(raw) = raw else {
            out.push(violation(ViolationKind::Empty));
            continue;
        };
        if raw.is_empty() {
            out.push(violation(ViolationKind::Empty));
            continue;
        }
        if raw.trim() != raw {
            out.push(violation(ViolationKind::Format));
            continue;
        }
        if spec.ty.parse(raw).is_some() {
            continue;
        }
        let kind = match &spec.ty {
            ParamType::Port | ParamType::DurationMs if raw.parse::<i128>().is_ok() => ViolationKind::Range,
            ParamType::Enum(_) => ViolationKind::Enum,
            _ => ViolationKind::Type,
        };
        out.push(violation(kind));
    }
    for key in store.keys().filter(|k| !registry.contains(k)) {
        out.push(Violation {
            param: key.clone(),
            kind: ViolationKind::UnknownParam,
            value: store.get_raw(key).map(str::to_string),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub count: usize,
    pub rate: f64,
}

impl Rate {
    fn of(count: usize, size: usize) -> Self {
        Self { count, rate: if size == 0 { 0.0 } else { count as f64 / size as f64 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigOutcome {
    pub index: usize,
    pub label: Label,
    pub param: Option<ParamId>,
    pub operator: Option<MutationOperator>,
    pub value: Option<String>,
    pub selected: Vec<String>,
    pub detecting_tests: Vec<String>,
    pub ctest_detected: bool,
    pub validator_violations: Vec<Violation>,
    pub validator_flagged: bool,
}

impl ConfigOutcome {
    /// Passes the validator yet the tests catch it.
    pub fn is_legal_misconfiguration(&self) -> bool {
        self.label == Label::Bad && !self.validator_flagged && self.ctest_detected
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorDetection {
    pub operator: MutationOperator,
    pub value: String,
    pub detected: bool,
    pub validator_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDetection {
    pub param: ParamId,
    pub mutants: usize,
    pub detected: usize,
    pub outcomes: Vec<OperatorDetection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidatorComparison {
    pub both: usize,
    pub ctest_only: usize,
    pub validator_only: usize,
    pub neither: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub schema_version: u32,
    pub policy: String,
    pub good_configs: usize,
    pub bad_configs: usize,
    pub false_negatives: Rate,
    pub false_positives: Rate,
    pub legal_misconfigurations: usize,
    pub validator_comparison: ValidatorComparison,
    pub per_param: Vec<ParamDetection>,
    pub configs: Vec<ConfigOutcome>,
}

impl QualityReport {
    pub fn is_clean(&self) -> bool {
        self.false_negatives.count == 0 && self.false_positives.count == 0
    }

    pub fn legal_misconfiguration_witnesses(&self) -> impl Iterator<Item = &ConfigOutcome> {
        self.configs.iter().filter(|c| c.is_legal_misconfiguration())
    }
}

/// Scores the suite on a corpus.
///
/// Good configurations run the whole suite; any failing test is a false
/// positive. Bad configurations run the tests selected for their diff against
/// the first good configuration; all passing is a false negative.
pub fn evaluate_quality(
    harness: &Harness,
    calibration: &Calibration,
    corpus: &[LabeledConfig],
    covmap: &CoverageMap,
    policy: &ConcretizationPolicy,
) -> Result<QualityReport, QualityError> {
    let registry = harness.registry();
    let reference = corpus.iter().find(|c| c.label == Label::Good).ok_or(QualityError::NoGoodConfig)?;
    let suite_order = harness.test_ids();

    let mut configs = Vec::with_capacity(corpus.len());
    for (index, item) in corpus.iter().enumerate() {
        let selected: Vec<String> = match item.label {
            Label::Good => suite_order.clone(),
            Label::Bad => {
                let diff = compute_diff(&reference.store, &item.store);
                select_tests(&diff, covmap, registry, &suite_order)?.selected
            }
        };
        let only: BTreeSet<String> = selected.iter().cloned().collect();
        let report = harness.run_calibrated(calibration, &item.store, policy, Some(&only)).into_complete()?;
        let detecting_tests: Vec<String> = report.detections().iter().map(|r| r.test_id.clone()).collect();
        let violations = baseline_validate(&item.store, registry);
        configs.push(ConfigOutcome {
            index,
            label: item.label,
            param: item.mutated_param.clone(),
            operator: item.operator,
            value: item.mutated_value().map(str::to_string),
            selected,
            ctest_detected: !detecting_tests.is_empty(),
            detecting_tests,
            validator_flagged: !violations.is_empty(),
            validator_violations: violations,
        });
    }
    Ok(summarize(configs, policy))
}

fn summarize(configs: Vec<ConfigOutcome>, policy: &ConcretizationPolicy) -> QualityReport {
    let good: Vec<&ConfigOutcome> = configs.iter().filter(|c| c.label == Label::Good).collect();
    let bad: Vec<&ConfigOutcome> = configs.iter().filter(|c| c.label == Label::Bad).collect();
    let fp = good.iter().filter(|c| c.ctest_detected).count();
    let fn_ = bad.iter().filter(|c| !c.ctest_detected).count();

    let mut comparison = ValidatorComparison::default();
    let mut per_param: BTreeMap<ParamId, ParamDetection> = BTreeMap::new();
    for c in &bad {
        match (c.ctest_detected, c.validator_flagged) {
            (true, true) => comparison.both += 1,
            (true, false) => comparison.ctest_only += 1,
            (false, true) => comparison.validator_only += 1,
            (false, false) => comparison.neither += 1,
        }
        if let (Some(param), Some(operator)) = (&c.param, c.operator) {
            let entry = per_param.entry(param.clone()).or_insert_with(|| ParamDetection {
                param: param.clone(),
                mutants: 0,
                detected: 0,
                outcomes: Vec::new(),
            });
            entry.mutants += 1;
            entry.detected += usize::from(c.ctest_detected);
            entry.outcomes.push(OperatorDetection {
                operator,
                value: c.value.clone().unwrap_or_default(),
                detected: c.ctest_detected,
                validator_flagged: c.validator_flagged,
            });
        }
    }
    QualityReport {
        schema_version: SCHEMA_VERSION,
        policy: policy.to_string(),
        good_configs: good.len(),
        bad_configs: bad.len(),
        false_negatives: Rate::of(fn_, bad.len()),
        false_positives: Rate::of(fp, good.len()),
        legal_misconfigurations: comparison.ctest_only,
        validator_comparison: comparison,
        per_param: per_param.into_values().collect(),
        configs,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub file: String,
    pub label: Label,
    pub mutated_param: Option<ParamId>,
    pub operator: Option<MutationOperator>,
    /// Exact mutated value; properties files trim surrounding whitespace.
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub schema_version: u32,
    pub seed: u64,
    pub entries: Vec<CorpusEntry>,
}

/// Writes one properties file per config plus `index.json`.
pub fn write_corpus(dir: &Path, corpus: &[LabeledConfig], seed: u64) -> Result<CorpusIndex, QualityError> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::new();
    for (i, item) in corpus.iter().enumerate() {
        let file = match (&item.mutated_param, item.operator) {
            (Some(p), Some(op)) => format!("{i:03}-{p}-{op}.properties"),
            _ => format!("{i:03}-good.properties"),
        };
        fs::write(dir.join(&file), serialize_properties(&item.store))?;
        entries.push(CorpusEntry {
            file,
            label: item.label,
            mutated_param: item.mutated_param.clone(),
            operator: item.operator,
            value: item.mutated_value().map(str::to_string),
        });
    }
    let index = CorpusIndex { schema_version: SCHEMA_VERSION, seed, entries };
    fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(index)
}

pub fn read_corpus(dir: &Path) -> Result<Vec<LabeledConfig>, QualityError> {
    let index: CorpusIndex = serde_json::from_str(&fs::read_to_string(dir.join("index.json"))?)?;
    let mut corpus = Vec::new();
    for entry in index.entries {
        let mut store = parse_properties(&fs::read_to_string(dir.join(&entry.file))?)?.store;
        if let (Some(param), Some(value)) = (&entry.mutated_param, &entry.value) {
            store.insert(param.clone(), value.clone());
        }
        let provenance = match entry.label {
            Label::Good => Provenance::Deployed,
            Label::Bad => Provenance::Mutated,
        };
        corpus.push(LabeledConfig {
            store: store.with_provenance(provenance),
            label: entry.label,
            mutated_param: entry.mutated_param,
            operator: entry.operator,
        });
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::register_params;
    use crate::sandbox::{Fixture, Sandbox, SandboxSpec};

    fn id(s: &str) -> ParamId {
        ParamId::new(s).unwrap()
    }

    fn spec(name: &str, ty: ParamType) -> ParamSpec {
        ParamSpec::new(id(name), ty)
    }

    #[test]
    fn mutate_examples() {
        assert_eq!(mutate(&spec("port", ParamType::Port), "8020", MutationOperator::RangeBreak, 0).unwrap(), "65536");
        assert_eq!(mutate(&spec("t", ParamType::Int), "30000", MutationOperator::UnitScale, 0).unwrap(), "30000000");
        assert_eq!(mutate(&spec("d", ParamType::DurationMs), "5", MutationOperator::RangeBreak, 0).unwrap(), "-1");
        assert!(matches!(
            mutate(&spec("b", ParamType::Bool), "true", MutationOperator::UnitScale, 0),
            Err(QualityError::InapplicableOperator { .. })
        ));
        assert!(mutate(&spec("s", ParamType::String), "", MutationOperator::EmptyValue, 0).is_err());
    }

    #[test]
    fn nonexistent_path_is_absent_after_materialization() {
        let reg = register_params(vec![spec("key", ParamType::Path).with_default("@sandbox/keys/k")]).unwrap();
        let sandbox_spec = SandboxSpec::new(vec![Fixture::file("keys/k", "secret")]);
        for seed in 0..16 {
            let value =
                mutate(reg.get(&id("key")).unwrap(), "@sandbox/keys/k", MutationOperator::NonexistentPath, seed)
                    .unwrap();
            let store = ConfigStore::default().with_value("key", value.clone()).unwrap();
            let sb = Sandbox::create(&sandbox_spec, &store, &reg).unwrap();
            assert!(!sb.resolve(Path::new(&value)).exists(), "{value}");
        }
    }

    #[test]
    fn mutants_never_equal_base_and_break_parsing_where_promised() {
        let types = [
            ParamType::Int,
            ParamType::Float,
            ParamType::Bool,
            ParamType::Port,
            ParamType::DurationMs,
            ParamType::Enum(vec!["a".into(), "b".into()]),
            ParamType::String,
            ParamType::Path,
        ];
        let bases = ["7", "0.5", "true", "8020", "3000", "a", "node", "@sandbox/x"];
        for (ty, base) in types.iter().zip(bases) {
            let s = spec("p", ty.clone());
            for op in MutationOperator::ALL {
                for seed in 0..8 {
                    match mutate(&s, base, op, seed) {
                        Ok(v) => {
                            assert_ne!(v, base);
                            assert_eq!(mutate(&s, base, op, seed).unwrap(), v, "not deterministic");
                            if matches!(
                                op,
                                MutationOperator::TypeBreak
                                    | MutationOperator::EnumInvalid
                                    | MutationOperator::RangeBreak
                            ) {
                                assert!(ty.parse(&v).is_none(), "{op} produced valid {v:?} for {ty}");
                            }
                        }
                        Err(_) => {
                            assert!(!op.applicable(ty) || op == MutationOperator::UnitScale && ty.parse(base).is_none())
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn corpus_budget_and_single_mutation() {
        let reg = register_params(vec![
            spec("a", ParamType::Path).with_default("@sandbox/a"),
            spec("b", ParamType::Int).with_default("5"),
        ])
        .unwrap();
        let good = reg.defaults();
        let corpus = enumerate_mutants(&reg, &good, 0, 7);
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus[0].label, Label::Good);

        let path_only = register_params(vec![spec("a", ParamType::Path).with_default("@sandbox/a")]).unwrap();
        let corpus = enumerate_mutants(&path_only, &path_only.defaults(), 2, 3);
        assert_eq!(corpus.len(), 3);
        for m in &corpus[1..] {
            assert_eq!(m.label, Label::Bad);
            assert_eq!(compute_diff(&corpus[0].store, &m.store).len(), 1);
        }
        assert_eq!(enumerate_mutants(&reg, &good, 20, 9), enumerate_mutants(&reg, &good, 20, 9));
    }

    #[test]
    fn validator_rules() {
        let reg = register_params(vec![
            spec("port", ParamType::Port).with_default("8020"),
            spec("key", ParamType::Path).with_default("@sandbox/keys/k"),
            spec("mode", ParamType::Enum(vec!["x".into()])).with_default("x"),
            spec("n", ParamType::Int),
        ])
        .unwrap();
        let mut store = reg.defaults();
        store.set_value("n", "4").unwrap();
        assert!(baseline_validate(&store, &reg).is_empty());

        let bad = store.with_value("port", "-1").unwrap();
        assert_eq!(
            baseline_validate(&bad, &reg),
            vec![Violation { param: id("port"), kind: ViolationKind::Range, value: Some("-1".into()) }]
        );
        let corrupt = store.with_value("key", "@sandbox/.corrupt/keys/k").unwrap();
        assert!(baseline_validate(&corrupt, &reg).is_empty());

        let kinds = |s: &ConfigStore| baseline_validate(s, &reg).into_iter().map(|v| v.kind).collect::<Vec<_>>();
        assert_eq!(kinds(&store.with_value("n", "x").unwrap()), vec![ViolationKind::Type]);
        assert_eq!(kinds(&store.with_value("n", " 4").unwrap()), vec![ViolationKind::Format]);
        assert_eq!(kinds(&store.with_value("mode", "y").unwrap()), vec![ViolationKind::Enum]);
        assert_eq!(kinds(&store.with_value("key", "").unwrap()), vec![ViolationKind::Empty]);
        assert_eq!(kinds(&store.with_value("other", "1").unwrap()), vec![ViolationKind::UnknownParam]);
        let mut missing = store.clone();
        missing.remove(&id("n"));
        assert_eq!(kinds(&missing), vec![ViolationKind::Empty]);
    }

    #[test]
    fn rate_arithmetic() {
        let r = Rate::of(2, 45);
        assert_eq!(r.count, 2);
        assert_eq!((r.rate * 1000.0).round() / 10.0, 4.4);
        assert_eq!(Rate::of(0, 0).rate, 0.0);
    }
}
