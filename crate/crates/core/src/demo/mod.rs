//! The demo system under test: a small storage node, its parameter registry,
//! a known-good deployment, sandbox fixtures and a suite of existing tests.

pub mod node;
mod suite;

use crate::harness::Harness;
use crate::io::{load_registry, parse_properties};
use crate::model::{ConfigStore, ParamRegistry};
use crate::sandbox::{Fixture, SandboxSpec};

pub use node::{FenceOutcome, NodeFault, NodeState};
pub use suite::demo_suite;

pub const REGISTRY_MANIFEST: &str = include_str!("../../fixtures/demo.registry");
pub const DEFAULT_CONFIG: &str = include_str!("../../fixtures/demo.properties");
pub const FENCE_KEY_HEX: &str = "9f86d081884c7d659a2feaa0c55ad015";

pub fn demo_registry() -> ParamRegistry {
    load_registry(REGISTRY_MANIFEST).expect("bundled demo registry is valid")
}

pub fn default_config() -> ConfigStore {
    parse_properties(DEFAULT_CONFIG).expect("bundled demo config is valid").store
}

pub fn sandbox_spec() -> SandboxSpec {
    SandboxSpec::new(vec![
        Fixture::file("data/VERSION", format!("{}\nnamespace=demo\n", node::STORAGE_MAGIC)),
        Fixture::file("keys/fence.key", node::key_file_content(FENCE_KEY_HEX)).with_mode(0o600),
    ])
}

pub fn demo_harness() -> Harness {
    Harness::new(demo_suite(), demo_registry(), sandbox_spec()).expect("demo test ids are unique")
}

/// Builds a harness for the demo suite over another registry, e.g. one loaded from disk.
pub fn demo_harness_with(registry: ParamRegistry) -> Harness {
    Harness::new(demo_suite(), registry, sandbox_spec()).expect("demo test ids are unique")
}
