//! Typed configuration model: parameter ids, schemas, stores and diffs.
//!
//! Stores hold raw strings. Types are only applied when a value is read,
//! so a store can carry ill-typed values for tests to trip over.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid parameter id {0:?}")]
    InvalidParamId(String),
    #[error("parameter {0} registered more than once")]
    DuplicateParam(ParamId),
    #[error("parameter {dependent} depends on unregistered parameter {dependee}")]
    DanglingDependency { dependent: ParamId, dependee: ParamId },
    #[error("dependency cycle through {0}")]
    CyclicDependency(ParamId),
    #[error("default {raw:?} of {param} does not parse as {ty}")]
    BadDefault { param: ParamId, ty: ParamType, raw: String },
    #[error("unknown parameter {0}")]
    UnknownParam(ParamId),
    #[error("no value and no default for {0}")]
    MissingValue(ParamId),
    #[error("{param}: {raw:?} is not a valid {ty}")]
    TypeMismatch { param: ParamId, ty: ParamType, raw: String },
    #[error("invalid parameter type {0:?}")]
    InvalidParamType(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Dotted lowercase parameter name such as `failover.keyfile`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ParamId(String);

impl ParamId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if Self::is_valid(&name) {
            Ok(Self(name))
        } else {
            Err(ModelError::InvalidParamId(name))
        }
    }

    pub fn is_valid(name: &str) -> bool {
        !name.is_empty()
            && name.split('.').all(|seg| {
                !seg.is_empty()
                    && seg.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_' || b == b'-')
            })
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ParamId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

impl TryFrom<String> for ParamId {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self> {
        Self::new(s)
    }
}

impl From<ParamId> for String {
    fn from(id: ParamId) -> Self {
        id.0
    }
}

impl AsRef<str> for ParamId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Value domain of a parameter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParamType {
    String,
    Int,
    Float,
    Bool,
    Path,
    /// Non-negative whole milliseconds, bare digits only.
    DurationMs,
    Enum(Vec<String>),
    /// Integer in `[1, 65535]`.
    Port,
}

/// Type kind without enum payload, used to describe operator applicability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeKind {
    String,
    Int,
    Float,
    Bool,
    Path,
    DurationMs,
    Enum,
    Port,
}

impl ParamType {
    pub fn kind(&self) -> TypeKind {
        match self {
            ParamType::String => TypeKind::String,
            ParamType::Int => TypeKind::Int,
            ParamType::Float => TypeKind::Float,
            ParamType::Bool => TypeKind::Bool,
            ParamType::Path => TypeKind::Path,
            ParamType::DurationMs => TypeKind::DurationMs,
            ParamType::Enum(_) => TypeKind::Enum,
            ParamType::Port => TypeKind::Port,
        }
    }

    /// Strict parse of a raw value. No trimming or unit handling.
    pub fn parse(&self, raw: &str) -> Option<TypedValue> {
        match self {
            ParamType::String => Some(TypedValue::Str(raw.to_string())),
            ParamType::Int => parse_int(raw).map(TypedValue::Int),
            ParamType::Float => {
                // f64::from_str accepts "inf"/"nan"; only finite decimals are valid here
                if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b)) {
                    return None;
                }
                raw.parse::<f64>().ok().filter(|v| v.is_finite()).map(TypedValue::Float)
            }
            ParamType::Bool => match raw {
                "true" => Some(TypedValue::Bool(true)),
                "false" => Some(TypedValue::Bool(false)),
                _ => None,
            },
            ParamType::Path => (!raw.is_empty()).then(|| TypedValue::Path(PathBuf::from(raw))),
            ParamType::DurationMs => {
                if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                raw.parse::<u64>().ok().map(TypedValue::DurationMs)
            }
            ParamType::Enum(variants) => variants.iter().any(|v| v == raw).then(|| TypedValue::Enum(raw.to_string())),
            ParamType::Port => parse_int(raw).filter(|p| (1..=65535).contains(p)).map(|p| TypedValue::Port(p as u16)),
        }
    }
}

fn parse_int(raw: &str) -> Option<i64> {
    let digits = raw.strip_prefix('-').unwrap_or(raw);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    raw.parse().ok()
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamType::String => f.write_str("string"),
            ParamType::Int => f.write_str("int"),
            ParamType::Float => f.write_str("float"),
            ParamType::Bool => f.write_str("bool"),
            ParamType::Path => f.write_str("path"),
            ParamType::DurationMs => f.write_str("duration-ms"),
            ParamType::Enum(v) => write!(f, "enum({})", v.join("|")),
            ParamType::Port => f.write_str("port"),
        }
    }
}

impl FromStr for ParamType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        let ty = match s {
            "string" => ParamType::String,
            "int" => ParamType::Int,
            "float" => ParamType::Float,
            "bool" => ParamType::Bool,
            "path" => ParamType::Path,
            "duration-ms" => ParamType::DurationMs,
            "port" => ParamType::Port,
            _ => {
                let inner = s
                    .strip_prefix("enum(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| ModelError::InvalidParamType(s.to_string()))?;
                let variants: Vec<String> = inner.split('|').map(str::to_string).collect();
                let distinct: BTreeSet<&String> = variants.iter().collect();
                if variants.iter().any(|v| v.is_empty()) || distinct.len() != variants.len() {
                    return Err(ModelError::InvalidParamType(s.to_string()));
                }
                ParamType::Enum(variants)
            }
        };
        Ok(ty)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedValue {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
    Path(PathBuf),
    DurationMs(u64),
    Enum(String),
    Port(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyKind {
    /// The dependee switches on the feature the dependent controls.
    Enables,
    /// The dependent's effective value is computed from the dependee.
    Derives,
}

impl fmt::Display for DependencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DependencyKind::Enables => "enables",
            DependencyKind::Derives => "derives",
        })
    }
}

impl FromStr for DependencyKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enables" => Ok(DependencyKind::Enables),
            "derives" => Ok(DependencyKind::Derives),
            other => Err(ModelError::InvalidParamType(other.to_string())),
        }
    }
}

/// `dependent` depends on `dependee`: changing the dependee must retest the dependent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub dependent: ParamId,
    pub dependee: ParamId,
    pub kind: DependencyKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub id: ParamId,
    pub ty: ParamType,
    pub default: Option<String>,
    pub description: String,
    /// Outgoing edges; `dependent` is always `id`.
    dependencies: Vec<DependencyEdge>,
}

impl ParamSpec {
    pub fn new(id: ParamId, ty: ParamType) -> Self {
        Self { id, ty, default: None, description: String::new(), dependencies: Vec::new() }
    }

    pub fn with_default(mut self, raw: impl Into<String>) -> Self {
        self.default = Some(raw.into());
        self
    }

    pub fn with_description(mut self, text: impl Into<String>) -> Self {
        self.description = text.into();
        self
    }

    pub fn depends_on(mut self, kind: DependencyKind, dependee: ParamId) -> Self {
        self.add_dependency(kind, dependee);
        self
    }

    pub fn add_dependency(&mut self, kind: DependencyKind, dependee: ParamId) {
        self.dependencies.push(DependencyEdge { dependent: self.id.clone(), dependee, kind });
    }

    pub fn dependencies(&self) -> &[DependencyEdge] {
        &self.dependencies
    }
}

/// Validated, immutable set of parameter specs with an acyclic dependency graph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamRegistry {
    specs: BTreeMap<ParamId, ParamSpec>,
}

/// Builds a registry, rejecting duplicates, bad defaults, dangling edges and cycles.
pub fn register_params(specs: Vec<ParamSpec>) -> Result<ParamRegistry> {
    let mut map = BTreeMap::new();
    for spec in specs {
        if map.contains_key(&spec.id) {
            return Err(ModelError::DuplicateParam(spec.id));
        }
        if let Some(raw) = &spec.default {
            if spec.ty.parse(raw).is_none() {
                return Err(ModelError::BadDefault { param: spec.id.clone(), ty: spec.ty.clone(), raw: raw.clone() });
            }
        }
        map.insert(spec.id.clone(), spec);
    }
    for spec in map.values() {
        for edge in &spec.dependencies {
            if edge.dependent == edge.dependee {
                return Err(ModelError::CyclicDependency(edge.dependent.clone()));
            }
            if !map.contains_key(&edge.dependee) {
                return Err(ModelError::DanglingDependency {
                    dependent: edge.dependent.clone(),
                    dependee: edge.dependee.clone(),
                });
            }
        }
    }
    let registry = ParamRegistry { specs: map };
    if let Some(id) = registry.find_cycle() {
        return Err(ModelError::CyclicDependency(id));
    }
    Ok(registry)
}

impl ParamRegistry {
    pub fn get(&self, id: &ParamId) -> Option<&ParamSpec> {
        self.specs.get(id)
    }

    pub fn spec(&self, id: &ParamId) -> Result<&ParamSpec> {
        self.specs.get(id).ok_or_else(|| ModelError::UnknownParam(id.clone()))
    }

    pub fn lookup(&self, name: &str) -> Option<&ParamSpec> {
        // ParamId ordering is string ordering, so a borrowed lookup via a temp id is fine
        ParamId::new(name).ok().and_then(|id| self.specs.get(&id))
    }

    pub fn contains(&self, id: &ParamId) -> bool {
        self.specs.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ParamId> {
        self.specs.keys()
    }

    pub fn specs(&self) -> impl Iterator<Item = &ParamSpec> {
        self.specs.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &DependencyEdge> {
        self.specs.values().flat_map(|s| s.dependencies.iter())
    }

    /// Parameters that declare a dependency on `dependee`.
    pub fn direct_dependents<'a>(&'a self, dependee: &'a ParamId) -> impl Iterator<Item = &'a ParamId> + 'a {
        self.edges().filter(move |e| &e.dependee == dependee).map(|e| &e.dependent)
    }

    /// A store holding every declared default.
    pub fn defaults(&self) -> ConfigStore {
        let mut store = ConfigStore::new(Provenance::TestDefault);
        for spec in self.specs.values() {
            if let Some(raw) = &spec.default {
                store.entries.insert(spec.id.clone(), raw.clone());
            }
        }
        store
    }

    fn find_cycle(&self) -> Option<ParamId> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Fresh,
            Active,
            Done,
        }
        let mut marks: BTreeMap<&ParamId, Mark> = self.specs.keys().map(|k| (k, Mark::Fresh)).collect();
        for root in self.specs.keys() {
            if marks[root] != Mark::Fresh {
                continue;
            }
            // iterative DFS over dependent -> dependee edges
            let mut stack: Vec<(&ParamId, usize)> = vec![(root, 0)];
            marks.insert(root, Mark::Active);
            while let Some((node, next)) = stack.pop() {
                let deps = &self.specs[node].dependencies;
                if next < deps.len() {
                    stack.push((node, next + 1));
                    let target = &deps[next].dependee;
                    match marks[target] {
                        Mark::Active => return Some(target.clone()),
                        Mark::Fresh => {
                            marks.insert(target, Mark::Active);
                            stack.push((target, 0));
                        }
                        Mark::Done => {}
                    }
                } else {
                    marks.insert(node, Mark::Done);
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    #[default]
    TestDefault,
    Deployed,
    Mutated,
}

/// Raw key/value configuration. Equality compares entries only.
#[derive(Debug, Clone, Default)]
pub struct ConfigStore {
    entries: BTreeMap<ParamId, String>,
    pub provenance: Provenance,
}

impl PartialEq for ConfigStore {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for ConfigStore {}

impl ConfigStore {
    pub fn new(provenance: Provenance) -> Self {
        Self { entries: BTreeMap::new(), provenance }
    }

    pub fn from_entries(entries: BTreeMap<ParamId, String>, provenance: Provenance) -> Self {
        Self { entries, provenance }
    }

    pub fn get_raw(&self, id: &ParamId) -> Option<&str> {
        self.entries.get(id).map(String::as_str)
    }

    pub fn contains(&self, id: &ParamId) -> bool {
        self.entries.contains_key(id)
    }

    pub fn entries(&self) -> &BTreeMap<ParamId, String> {
        &self.entries
    }

    pub fn keys(&self) -> impl Iterator<Item = &ParamId> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or replaces a raw value. No type check.
    pub fn set_value(&mut self, key: &str, raw: impl Into<String>) -> Result<()> {
        let id = ParamId::new(key)?;
        self.entries.insert(id, raw.into());
        Ok(())
    }

    pub fn insert(&mut self, id: ParamId, raw: impl Into<String>) -> Option<String> {
        self.entries.insert(id, raw.into())
    }

    pub fn remove(&mut self, id: &ParamId) -> Option<String> {
        self.entries.remove(id)
    }

    /// Value-style `set_value`: returns a modified copy.
    pub fn with_value(&self, key: &str, raw: impl Into<String>) -> Result<Self> {
        let mut next = self.clone();
        next.set_value(key, raw)?;
        Ok(next)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Raw value that a read of `id` observes: the stored value, else the default.
    pub fn effective_raw<'a>(&'a self, registry: &'a ParamRegistry, id: &ParamId) -> Result<Option<&'a str>> {
        let spec = registry.spec(id)?;
        Ok(self.get_raw(id).or(spec.default.as_deref()))
    }

    pub fn typed_get(&self, registry: &ParamRegistry, id: &ParamId) -> Result<TypedValue> {
        typed_get(self, registry, id)
    }
}

/// Reads `id` under its registered type, falling back to the declared default.
pub fn typed_get(store: &ConfigStore, registry: &ParamRegistry, id: &ParamId) -> Result<TypedValue> {
    let spec = registry.spec(id)?;
    let raw = store.get_raw(id).or(spec.default.as_deref()).ok_or_else(|| ModelError::MissingValue(id.clone()))?;
    spec.ty.parse(raw).ok_or_else(|| ModelError::TypeMismatch {
        param: id.clone(),
        ty: spec.ty.clone(),
        raw: raw.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfigDiff {
    pub changed: BTreeMap<ParamId, (String, String)>,
    pub added: BTreeMap<ParamId, String>,
    pub removed: BTreeMap<ParamId, String>,
}

impl ConfigDiff {
    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.added.is_empty() && self.removed.is_empty()
    }

    /// Every key the diff touches.
    pub fn keys(&self) -> BTreeSet<ParamId> {
        self.changed.keys().chain(self.added.keys()).chain(self.removed.keys()).cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.changed.len() + self.added.len() + self.removed.len()
    }

    /// Applies the diff to `base`, producing the new side.
    pub fn apply(&self, base: &ConfigStore) -> ConfigStore {
        let mut next = base.clone();
        for (id, (_, new)) in &self.changed {
            next.entries.insert(id.clone(), new.clone());
        }
        for (id, new) in &self.added {
            next.entries.insert(id.clone(), new.clone());
        }
        for id in self.removed.keys() {
            next.entries.remove(id);
        }
        next
    }
}

pub fn compute_diff(old: &ConfigStore, new: &ConfigStore) -> ConfigDiff {
    let mut diff = ConfigDiff::default();
    for (id, old_raw) in &old.entries {
        match new.entries.get(id) {
            Some(new_raw) if new_raw != old_raw => {
                diff.changed.insert(id.clone(), (old_raw.clone(), new_raw.clone()));
            }
            Some(_) => {}
            None => {
                diff.removed.insert(id.clone(), old_raw.clone());
            }
        }
    }
    for (id, new_raw) in &new.entries {
        if !old.entries.contains_key(id) {
            diff.added.insert(id.clone(), new_raw.clone());
        }
    }
    diff
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> ParamId {
        ParamId::new(s).unwrap()
    }

    fn store(pairs: &[(&str, &str)]) -> ConfigStore {
        let mut s = ConfigStore::default();
        for (k, v) in pairs {
            s.set_value(k, *v).unwrap();
        }
        s
    }

    #[test]
    fn param_id_validation() {
        assert!(ParamId::new("failover.keyfile").is_ok());
        assert!(ParamId::new("a_b-c.d9").is_ok());
        for bad in ["", "A", "a..b", ".a", "a.", "a b", "A b", "a/b"] {
            assert!(ParamId::new(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn register_minimal_registry() {
        let reg = register_params(vec![
            ParamSpec::new(id("a"), ParamType::String),
            ParamSpec::new(id("b"), ParamType::String).depends_on(DependencyKind::Enables, id("a")),
        ])
        .unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.edges().count(), 1);
    }

    #[test]
    fn register_rejects_self_loop() {
        let err = register_params(vec![
            ParamSpec::new(id("a"), ParamType::String).depends_on(DependencyKind::Derives, id("a"))
        ])
        .unwrap_err();
        assert_eq!(err, ModelError::CyclicDependency(id("a")));
    }

    #[test]
    fn register_rejects_bad_default() {
        let err = register_params(vec![ParamSpec::new(id("a"), ParamType::Int).with_default("x")]).unwrap_err();
        assert!(matches!(err, ModelError::BadDefault { .. }));
    }

    #[test]
    fn register_rejects_longer_cycle_and_dangling() {
        let err = register_params(vec![
            ParamSpec::new(id("a"), ParamType::Int).depends_on(DependencyKind::Derives, id("b")),
            ParamSpec::new(id("b"), ParamType::Int).depends_on(DependencyKind::Derives, id("c")),
            ParamSpec::new(id("c"), ParamType::Int).depends_on(DependencyKind::Enables, id("a")),
        ])
        .unwrap_err();
        assert!(matches!(err, ModelError::CyclicDependency(_)));

        let err =
            register_params(
                vec![ParamSpec::new(id("a"), ParamType::Int).depends_on(DependencyKind::Derives, id("zz"))],
            )
            .unwrap_err();
        assert!(matches!(err, ModelError::DanglingDependency { .. }));

        let err =
            register_params(vec![ParamSpec::new(id("a"), ParamType::Int), ParamSpec::new(id("a"), ParamType::Bool)])
                .unwrap_err();
        assert_eq!(err, ModelError::DuplicateParam(id("a")));
    }

    #[test]
    fn typed_get_examples() {
        let reg = register_params(vec![
            ParamSpec::new(id("port"), ParamType::Port),
            ParamSpec::new(id("hb"), ParamType::DurationMs).with_default("30000"),
            ParamSpec::new(id("none"), ParamType::Int),
        ])
        .unwrap();
        assert_eq!(typed_get(&store(&[("port", "8020")]), &reg, &id("port")), Ok(TypedValue::Port(8020)));
        assert_eq!(typed_get(&store(&[]), &reg, &id("hb")), Ok(TypedValue::DurationMs(30000)));
        assert!(matches!(
            typed_get(&store(&[("port", "-1")]), &reg, &id("port")),
            Err(ModelError::TypeMismatch { .. })
        ));
        assert_eq!(typed_get(&store(&[]), &reg, &id("none")), Err(ModelError::MissingValue(id("none"))));
        assert_eq!(typed_get(&store(&[]), &reg, &id("other")), Err(ModelError::UnknownParam(id("other"))));
    }

    #[test]
    fn strict_parsing() {
        assert_eq!(ParamType::Port.parse("65535"), Some(TypedValue::Port(65535)));
        assert_eq!(ParamType::Port.parse("65536"), None);
        assert_eq!(ParamType::Port.parse("0"), None);
        assert_eq!(ParamType::Int.parse(" 3"), None);
        assert_eq!(ParamType::Int.parse("+3"), None);
        assert_eq!(ParamType::Int.parse("-3"), Some(TypedValue::Int(-3)));
        assert_eq!(ParamType::DurationMs.parse("-1"), None);
        assert_eq!(ParamType::DurationMs.parse("10s"), None);
        assert_eq!(ParamType::Float.parse("inf"), None);
        assert_eq!(ParamType::Float.parse("0.5"), Some(TypedValue::Float(0.5)));
        assert_eq!(ParamType::Bool.parse("True"), None);
        assert_eq!(ParamType::Path.parse(""), None);
        let e: ParamType = "enum(none|zlib-like)".parse().unwrap();
        assert_eq!(e.parse("zlib-like"), Some(TypedValue::Enum("zlib-like".into())));
        assert_eq!(e.parse("gzip"), None);
        assert!("enum()".parse::<ParamType>().is_err());
        assert!("enum(a|a)".parse::<ParamType>().is_err());
    }

    #[test]
    fn set_value_examples() {
        let s = ConfigStore::default().with_value("a.b", "1").unwrap();
        assert_eq!(s, store(&[("a.b", "1")]));
        assert_eq!(s.with_value("a.b", "2").unwrap(), store(&[("a.b", "2")]));
        assert_eq!(ConfigStore::default().with_value("A b", "1"), Err(ModelError::InvalidParamId("A b".into())));
    }

    #[test]
    fn diff_examples() {
        let a1 = store(&[("a", "1")]);
        assert!(compute_diff(&a1, &a1).is_empty());

        let d = compute_diff(&a1, &store(&[("a", "2"), ("b", "3")]));
        assert_eq!(d.changed.get(&id("a")), Some(&("1".to_string(), "2".to_string())));
        assert_eq!(d.added.get(&id("b")).map(String::as_str), Some("3"));
        assert!(d.removed.is_empty());

        let d = compute_diff(&store(&[("a", "1"), ("b", "2")]), &a1);
        assert!(d.changed.is_empty() && d.added.is_empty());
        assert_eq!(d.removed.get(&id("b")).map(String::as_str), Some("2"));
    }
}
