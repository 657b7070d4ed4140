//! Per-test temporary directories with fixture files.
//!
//! Path values beginning with `@sandbox/` resolve inside the sandbox root.
//! Three marker prefixes let a configuration value request a derived fixture
//! at materialization time:
//!
//! * `@sandbox/.deny/<rel>`: copy of `<rel>` with all permission bits cleared
//!   (files) or write bits cleared (directories)
//! * `@sandbox/.corrupt/<rel>`: copy of `<rel>` with every byte of every file
//!   flipped (same length, different content)
//! * `@sandbox/.missing/<name>`: guaranteed not to exist
//!
//! Permission checks go through [`is_readable`] and [`is_writable`], which
//! consult the owner mode bits so results do not depend on the effective uid.

use std::fs;
use std::io;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use tempfile::TempDir;

use crate::model::{ConfigStore, ParamRegistry, ParamType};

pub const SANDBOX_PREFIX: &str = "@sandbox/";
pub const DENY_DIR: &str = ".deny";
pub const CORRUPT_DIR: &str = ".corrupt";
pub const MISSING_DIR: &str = ".missing";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FixtureKind {
    File(Vec<u8>),
    Dir,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub path: String,
    pub kind: FixtureKind,
    pub mode: Option<u32>,
}

impl Fixture {
    pub fn file(path: impl Into<String>, content: impl Into<Vec<u8>>) -> Self {
        Self { path: path.into(), kind: FixtureKind::File(content.into()), mode: None }
    }

    pub fn dir(path: impl Into<String>) -> Self {
        Self { path: path.into(), kind: FixtureKind::Dir, mode: None }
    }

    pub fn with_mode(mut self, mode: u32) -> Self {
        self.mode = Some(mode);
        self
    }
}

/// Fixture files every sandbox starts with.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SandboxSpec {
    pub fixtures: Vec<Fixture>,
}

impl SandboxSpec {
    pub fn new(fixtures: Vec<Fixture>) -> Self {
        Self { fixtures }
    }
}

/// A live sandbox. Removed on drop.
#[derive(Debug)]
pub struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    /// Creates a fresh directory and materializes the fixtures, then any
    /// marker paths named by path-typed values in `store`.
    pub fn create(spec: &SandboxSpec, store: &ConfigStore, registry: &ParamRegistry) -> io::Result<Self> {
        let dir = tempfile::Builder::new().prefix("cfgtest-").tempdir()?;
        let sandbox = Self { dir };
        for fixture in &spec.fixtures {
            sandbox.write_fixture(fixture)?;
        }
        for spec in registry.specs().filter(|s| s.ty == ParamType::Path) {
            let raw = store.get_raw(&spec.id).or(spec.default.as_deref());
            if let Some(raw) = raw {
                sandbox.materialize_marker(raw)?;
            }
        }
        Ok(sandbox)
    }

    pub fn root(&self) -> &Path {
        self.dir.path()
    }

    pub fn write_fixture(&self, fixture: &Fixture) -> io::Result<()> {
        let target = self.root().join(&fixture.path);
        match &fixture.kind {
            FixtureKind::Dir => fs::create_dir_all(&target)?,
            FixtureKind::File(content) => {
                if let Some(parent) = target.parent() {
                    fs::create_dir_all(parent)?;
                }
                fs::write(&target, content)?;
            }
        }
        if let Some(mode) = fixture.mode {
            fs::set_permissions(&target, fs::Permissions::from_mode(mode))?;
        }
        Ok(())
    }

    fn materialize_marker(&self, raw: &str) -> io::Result<()> {
        let Some(rel) = raw.strip_prefix(SANDBOX_PREFIX) else {
            return Ok(());
        };
        let (marker, base) = rel.split_once('/').unwrap_or((rel, ""));
        if base.is_empty() {
            return Ok(());
        }
        let source = self.root().join(base);
        let target = self.root().join(marker).join(base);
        match marker {
            DENY_DIR => {
                if source.is_file() {
                    copy_tree(&source, &target)?;
                    fs::set_permissions(&target, fs::Permissions::from_mode(0o000))?;
                } else {
                    if source.is_dir() {
                        copy_tree(&source, &target)?;
                    } else {
                        fs::create_dir_all(&target)?;
                    }
                    fs::set_permissions(&target, fs::Permissions::from_mode(0o555))?;
                }
            }
            CORRUPT_DIR => {
                if source.exists() {
                    copy_tree(&source, &target)?;
                    corrupt_tree(&target)?;
                } else {
                    if let Some(parent) = target.parent() {
                        fs::create_dir_all(parent)?;
                    }
                    fs::write(&target, b"\x00corrupted\x00")?;
                }
            }
            MISSING_DIR if target.exists() => {
                remove_tree(&target)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Maps a configured path to a host path.
    pub fn resolve(&self, raw: &Path) -> PathBuf {
        resolve_in(self.root(), raw)
    }
}

pub fn resolve_in(root: &Path, raw: &Path) -> PathBuf {
    match raw.to_str().and_then(|s| s.strip_prefix(SANDBOX_PREFIX)) {
        Some(rel) => root.join(rel),
        None => raw.to_path_buf(),
    }
}

impl Drop for Sandbox {
    fn drop(&mut self) {
        // denied fixtures would otherwise block removal for non-root users
        let _ = restore_permissions(self.dir.path());
    }
}

fn restore_permissions(path: &Path) -> io::Result<()> {
    let meta = fs::symlink_metadata(path)?;
    if meta.is_dir() {
        fs::set_permissions(path, fs::Permissions::from_mode(0o755))?;
        for entry in fs::read_dir(path)? {
            restore_permissions(&entry?.path())?;
        }
    } else if meta.is_file() {
        fs::set_permissions(path, fs::Permissions::from_mode(0o644))?;
    }
    Ok(())
}

fn copy_tree(source: &Path, target: &Path) -> io::Result<()> {
    if let Some(parent) = target.parent() {
        fs::create_dir_all(parent)?;
    }
    if source.is_dir() {
        fs::create_dir_all(target)?;
        for entry in fs::read_dir(source)? {
            let entry = entry?;
            copy_tree(&entry.path(), &target.join(entry.file_name()))?;
        }
        Ok(())
    } else {
        fs::copy(source, target).map(|_| ())
    }
}

fn corrupt_tree(path: &Path) -> io::Result<()> {
    if path.is_dir() {
        for entry in fs::read_dir(path)? {
            corrupt_tree(&entry?.path())?;
        }
        Ok(())
    } else {
        let content: Vec<u8> = fs::read(path)?.iter().map(|b| b ^ 0x5a).collect();
        fs::write(path, content)
    }
}

fn remove_tree(path: &Path) -> io::Result<()> {
    if path.is_dir() {
        fs::remove_dir_all(path)
    } else {
        fs::remove_file(path)
    }
}

/// Owner read bit set.
pub fn is_readable(path: &Path) -> bool {
    fs::metadata(path).map(|m| m.permissions().mode() & 0o400 != 0).unwrap_or(false)
}

/// Owner write bit set.
pub fn is_writable(path: &Path) -> bool {
    fs::metadata(path).map(|m| m.permissions().mode() & 0o200 != 0).unwrap_or(false)
}
