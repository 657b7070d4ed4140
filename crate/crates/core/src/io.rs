//! Flat `key=value` configuration files and the registry manifest format.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{
    register_params, ConfigStore, DependencyKind, ModelError, ParamId, ParamRegistry, ParamSpec, ParamType, Provenance,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("line {0}: expected `key = value`")]
    MalformedLine(usize),
    #[error("line {line}: invalid parameter id {key:?}")]
    InvalidParamId { line: usize, key: String },
    #[error("manifest line {line}: {message}")]
    ManifestSyntax { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Entry,
    Comment,
    Blank,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertiesLine {
    pub raw: String,
    pub kind: LineKind,
}

/// A parsed properties file, lines kept in order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PropertiesDocument {
    pub lines: Vec<PropertiesLine>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateKey {
    pub key: ParamId,
    pub first_line: usize,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedProperties {
    pub store: ConfigStore,
    pub warnings: Vec<DuplicateKey>,
}

fn split_entry(line: &str) -> Option<(&str, &str)> {
    let (key, value) = line.split_once('=')?;
    Some((key.trim(), value.trim()))
}

impl PropertiesDocument {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            let trimmed = raw.trim();
            let kind = if trimmed.is_empty() {
                LineKind::Blank
            } else if trimmed.starts_with('#') {
                LineKind::Comment
            } else {
                let (key, _) = split_entry(trimmed).ok_or(IoError::MalformedLine(idx + 1))?;
                if !ParamId::is_valid(key) {
                    return Err(IoError::InvalidParamId { line: idx + 1, key: key.to_string() });
                }
                LineKind::Entry
            };
            lines.push(PropertiesLine { raw: raw.to_string(), kind });
        }
        Ok(Self { lines })
    }

    /// Builds the store; later duplicates win and are reported.
    pub fn to_store(&self) -> ParsedProperties {
        let mut store = ConfigStore::new(Provenance::Deployed);
        let mut seen: BTreeMap<ParamId, usize> = BTreeMap::new();
        let mut warnings = Vec::new();
        for (idx, line) in self.lines.iter().enumerate() {
            if line.kind != LineKind::Entry {
                continue;
            }
            let (key, value) = split_entry(line.raw.trim()).expect("entry lines contain '='");
            let id = ParamId::new(key).expect("entry keys validated at parse");
            if let Some(&first_line) = seen.get(&id) {
                warnings.push(DuplicateKey { key: id.clone(), first_line, line: idx + 1 });
            } else {
                seen.insert(id.clone(), idx + 1);
            }
            store.insert(id, value);
        }
        ParsedProperties { store, warnings }
    }
}

pub fn parse_properties(text: &str) -> Result<ParsedProperties, IoError> {
    Ok(PropertiesDocument::parse(text)?.to_store())
}

/// One `key=value` line per entry in key order.
pub fn serialize_properties(store: &ConfigStore) -> String {
    let mut out = String::new();
    for (key, value) in store.entries() {
        out.push_str(key.as_str());
        out.push('=');
        out.push_str(value);
        out.push('\n');
    }
    out
}

/// Parses a registry manifest:
///
/// ```text
/// # comment
/// param failover.enabled bool default=true
/// param failover.keyfile path default=@sandbox/keys/fence.key
/// dep failover.keyfile enables failover.enabled
/// ```
///
/// `default=` takes the rest of the line, trimmed. Dependencies may refer
/// forward to params declared later.
pub fn load_registry(text: &str) -> Result<ParamRegistry, IoError> {
    let mut specs: Vec<ParamSpec> = Vec::new();
    let mut deps: Vec<(usize, ParamId, DependencyKind, ParamId)> = Vec::new();
    let syntax = |line: usize, message: String| IoError::ManifestSyntax { line, message };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (directive, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim_start();
        match directive {
            "param" => {
                let mut parts = rest.splitn(3, char::is_whitespace);
                let name = parts
                    .next()
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| syntax(line_no, "missing parameter id".into()))?;
                let ty = parts.next().ok_or_else(|| syntax(line_no, "missing parameter type".into()))?;
                let id = ParamId::new(name).map_err(|_| syntax(line_no, format!("invalid parameter id {name:?}")))?;
                let ty: ParamType = ty.parse().map_err(|_| syntax(line_no, format!("unknown type {ty:?}")))?;
                let mut spec = ParamSpec::new(id, ty);
                if let Some(tail) = parts.next().map(str::trim_start).filter(|t| !t.is_empty()) {
                    let default =
                        tail.strip_prefix("default=").ok_or_else(|| syntax(line_no, format!("unexpected {tail:?}")))?;
                    spec = spec.with_default(default.trim());
                }
                specs.push(spec);
            }
            "dep" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [dependent, kind, dependee] = parts[..] else {
                    return Err(syntax(line_no, "expected `dep <dependent> <enables|derives> <dependee>`".into()));
                };
                let parse_id =
                    |s: &str| ParamId::new(s).map_err(|_| syntax(line_no, format!("invalid parameter id {s:?}")));
                let kind: DependencyKind =
                    kind.parse().map_err(|_| syntax(line_no, format!("unknown dependency kind {kind:?}")))?;
                deps.push((line_no, parse_id(dependent)?, kind, parse_id(dependee)?));
            }
            other => return Err(syntax(line_no, format!("unknown directive {other:?}"))),
        }
    }

    for (line_no, dependent, kind, dependee) in deps {
        // duplicate params are left for register_params to report
        let spec = specs
            .iter_mut()
            .find(|s| s.id == dependent)
            .ok_or_else(|| syntax(line_no, format!("dependency on undeclared parameter {dependent}")))?;
        spec.add_dependency(kind, dependee);
    }
    Ok(register_params(specs)?)
}

/// Serializes a registry back into manifest form.
pub fn write_registry(registry: &ParamRegistry) -> String {
    let mut out = String::new();
    for spec in registry.specs() {
        out.push_str(&format!("param {} {}", spec.id, spec.ty));
        if let Some(default) = &spec.default {
            out.push_str(&format!(" default={default}"));
        }
        out.push('\n');
    }
    for edge in registry.edges() {
        out.push_str(&format!("dep {} {} {}\n", edge.dependent, edge.kind, edge.dependee));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::compute_diff;

    fn id(s: &str) -> ParamId {
        ParamId::new(s).unwrap()
    }

    #[test]
    fn parse_basic() {
        let parsed = parse_properties("a.b=1\n# c\nport = 8020").unwrap();
        assert_eq!(parsed.store.len(), 2);
        assert_eq!(parsed.store.get_raw(&id("a.b")), Some("1"));
        assert_eq!(parsed.store.get_raw(&id("port")), Some("8020"));
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn duplicate_last_wins() {
        let parsed = parse_properties("a=1\na=2").unwrap();
        assert_eq!(parsed.store.get_raw(&id("a")), Some("2"));
        assert_eq!(parsed.warnings, vec![DuplicateKey { key: id("a"), first_line: 1, line: 2 }]);
    }

    #[test]
    fn malformed_and_invalid_lines() {
        assert_eq!(parse_properties("justakey").unwrap_err(), IoError::MalformedLine(1));
        assert_eq!(
            parse_properties("a=1\n\nBad Key=2").unwrap_err(),
            IoError::InvalidParamId { line: 3, key: "Bad Key".into() }
        );
    }

    #[test]
    fn value_verbatim_after_first_equals() {
        let parsed = parse_properties("k = a=b \\n \r\nempty=\r\n").unwrap();
        assert_eq!(parsed.store.get_raw(&id("k")), Some("a=b \\n"));
        assert_eq!(parsed.store.get_raw(&id("empty")), Some(""));
    }

    #[test]
    fn document_classifies_lines() {
        let doc = PropertiesDocument::parse("# head\n\na=1\n  # indented\n").unwrap();
        let kinds: Vec<LineKind> = doc.lines.iter().map(|l| l.kind).collect();
        assert_eq!(kinds, vec![LineKind::Comment, LineKind::Blank, LineKind::Entry, LineKind::Comment]);
    }

    #[test]
    fn serialize_examples() {
        let mut s = ConfigStore::default();
        s.set_value("b", "2").unwrap();
        s.set_value("a", "1").unwrap();
        assert_eq!(serialize_properties(&s), "a=1\nb=2\n");
        assert_eq!(serialize_properties(&ConfigStore::default()), "");
        let k = ConfigStore::default().with_value("k", "").unwrap();
        assert_eq!(serialize_properties(&k), "k=\n");
        assert_eq!(parse_properties("k=\n").unwrap().store, k);
    }

    #[test]
    fn trailing_whitespace_and_blank_lines_ignored() {
        let a = parse_properties("a=1\nb=2\n").unwrap().store;
        let b = parse_properties("\n\na=1   \n\n\nb=2\t\n\n").unwrap().store;
        assert_eq!(a, b);
    }

    #[test]
    fn file_diff_matches_store_diff() {
        let old_text = "a=1\nb=2\n";
        let new_text = "a=1\nb=3\nc=4\n";
        let old = parse_properties(old_text).unwrap().store;
        let new = parse_properties(new_text).unwrap().store;
        let diff = compute_diff(&old, &new);
        assert_eq!(diff.changed.len(), 1);
        assert_eq!(diff.added.len(), 1);
    }

    #[test]
    fn manifest_examples() {
        let reg =
            load_registry("# demo\nparam a bool default=true\nparam b path default=/tmp/with space\ndep b enables a\n")
                .unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(reg.edges().count(), 1);
        assert_eq!(reg.get(&id("b")).unwrap().default.as_deref(), Some("/tmp/with space"));

        let err = load_registry("param b path\ndep b enables a\n").unwrap_err();
        assert!(matches!(err, IoError::Model(ModelError::DanglingDependency { .. })));

        let err = load_registry("param a int\nparam a int\n").unwrap_err();
        assert_eq!(err, IoError::Model(ModelError::DuplicateParam(id("a"))));

        let err = load_registry("param a int\nparam b wat\n").unwrap_err();
        assert!(matches!(err, IoError::ManifestSyntax { line: 2, .. }));

        let err = load_registry("param a int default=x\n").unwrap_err();
        assert!(matches!(err, IoError::Model(ModelError::BadDefault { .. })));
    }

    #[test]
    fn manifest_round_trip() {
        let text = "param a bool default=true\nparam b enum(x|y) default=y\nparam c int\ndep b derives a\n";
        let reg = load_registry(text).unwrap();
        assert_eq!(load_registry(&write_registry(&reg)).unwrap(), reg);
    }
}
