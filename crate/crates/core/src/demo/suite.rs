use std::fs;
use std::time::Duration;

use super::node::{
    key_file_content, BlockCache, FenceOutcome, HeartbeatMonitor, NodeFault, NodeResult, NodeState, ReplicaPlanner,
    CLUSTER_SIZE,
};
use crate::harness::{check, TestCase, TestContext, TestFailure, TestOutcome};

/// Passes when `result` is the expected fault; other faults propagate as errors.
fn expect_fault<T: std::fmt::Debug>(
    result: NodeResult<T>,
    what: &str,
    matches: impl Fn(&NodeFault) -> bool,
) -> TestOutcome {
    match result {
        Err(f) if matches(&f) => Ok(()),
        Err(f) => Err(f.into()),
        Ok(v) => Err(TestFailure::Assertion(format!("expected {what}, got {v:?}"))),
    }
}

fn payload(len: usize) -> Vec<u8> {
    (0..len).map(|i| ((i * 31 + i / 7) % 251) as u8).collect()
}

fn write_key_fixture(ctx: &TestContext, rel: &str, content: &[u8], mode: u32) -> TestOutcome {
    use std::os::unix::fs::PermissionsExt;
    let path = ctx.sandbox_root().join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, content)?;
    fs::set_permissions(&path, fs::Permissions::from_mode(mode))?;
    Ok(())
}

fn storage_dir_is_formatted(ctx: &mut TestContext) -> TestOutcome {
    let node = NodeState::start(ctx)?;
    check(node.data_dir.join("VERSION").is_file(), "VERSION missing after start")?;
    check(node.data_dir.join("in_use.lock").is_file(), "storage lock not taken")
}

fn node_identity_registered(ctx: &mut TestContext) -> TestOutcome {
    let node = NodeState::start(ctx)?;
    let entry = node.membership_entry();
    let (name, port) = entry.rsplit_once(':').ok_or_else(|| TestFailure::Assertion(entry.clone()))?;
    check(name == node.name, "membership name mismatch")?;
    check(port.parse::<u16>().ok() == Some(node.port), "membership port mismatch")
}

fn http_port_distinct(ctx: &mut TestContext) -> TestOutcome {
    let mut node = NodeState::start(ctx)?;
    let http = node.start_http(ctx)?;
    check(http != node.port, "http and rpc share a port")
}

fn replica_plan_covers_blocks(ctx: &mut TestContext) -> TestOutcome {
    let planner = ReplicaPlanner::from_conf(ctx)?;
    let plan = planner.plan(12);
    check(plan.len() == 12, "every block needs a placement")?;
    for replicas in &plan {
        let mut distinct = replicas.clone();
        distinct.sort_unstable();
        distinct.dedup();
        check(distinct.len() == planner.factor(), format!("replicas collide: {replicas:?}"))?;
    }
    Ok(())
}

fn replica_plan_balanced(ctx: &mut TestContext) -> TestOutcome {
    let planner = ReplicaPlanner::from_conf(ctx)?;
    let loads = planner.loads(&planner.plan(4 * CLUSTER_SIZE));
    let (min, max) = (loads.iter().min().unwrap(), loads.iter().max().unwrap());
    check(max - min <= 1, format!("unbalanced placement {loads:?}"))
}

fn heartbeat_timeout_spans_beats(ctx: &mut TestContext) -> TestOutcome {
    let monitor = HeartbeatMonitor::from_conf(ctx)?;
    check(monitor.beats_per_window() >= 3, "peers get fewer than three beats per window")
}

fn heartbeat_detects_dead_peer(ctx: &mut TestContext) -> TestOutcome {
    let monitor = HeartbeatMonitor::from_conf(ctx)?;
    let last = Duration::from_secs(1);
    check(!monitor.is_dead(last, last + monitor.interval), "live peer declared dead")?;
    check(monitor.is_dead(last, last + monitor.timeout + monitor.interval), "dead peer not detected")
}

fn fence_with_configured_key(ctx: &mut TestContext) -> TestOutcome {
    let mut node = NodeState::start(ctx)?;
    match node.fence(ctx)? {
        FenceOutcome::Fenced { key_id, .. } => check(key_id.len() == 8, "fingerprint length"),
        FenceOutcome::Disabled => Ok(()),
    }
}

fn failover_promotes_standby(ctx: &mut TestContext) -> TestOutcome {
    let mut node = NodeState::start(ctx)?;
    if let FenceOutcome::Fenced { .. } = node.fence(ctx)? {
        node.promote()?;
        check(node.leader, "standby not promoted")?;
    } else {
        check(node.promote() == Err(NodeFault::NotFenced), "promotion without fencing")?;
    }
    Ok(())
}

fn cache_fits_heap(ctx: &mut TestContext) -> TestOutcome {
    let cache = BlockCache::from_conf(ctx)?;
    check(cache.capacity() > 0 && cache.is_empty(), "cache must start empty with room")
}

fn cache_evicts_lru(ctx: &mut TestContext) -> TestOutcome {
    let mut cache = BlockCache::from_conf(ctx)?;
    let cap = cache.capacity() as u64;
    for id in 0..cap {
        cache.insert(id, vec![id as u8]);
    }
    cache.get(0);
    cache.insert(cap, vec![0]);
    check(cache.len() == cap as usize, "cache exceeded capacity")?;
    check(cache.get(0).is_some(), "recently used entry evicted")?;
    check(cache.get(1).is_none() || cap == 1, "least recently used entry kept")
}

fn block_roundtrip(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("node.read_only", "false")?;
    let mut node = NodeState::start(ctx)?;
    let data = payload(10_000);
    let ids = node.write(ctx, &data)?;
    check(node.read(&ids)? == data, "read back differs")
}

fn compression_effective(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("node.read_only", "false")?;
    let mut node = NodeState::start(ctx)?;
    let data = vec![b'z'; 64 * 1024];
    let ids = node.write(ctx, &data)?;
    let stored = node.stored_bytes(&ids)?;
    let codec = ctx.get_string("storage.compression")?;
    if codec == "none" {
        check(stored >= data.len() as u64, "uncompressed blocks shrank")
    } else {
        check(stored < data.len() as u64 / 10, format!("{codec} stored {stored} bytes"))
    }
}

fn large_payload_split(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("node.read_only", "false")?;
    let mut node = NodeState::start(ctx)?;
    let kb = ctx.get_int("storage.block_size_kb")? as usize;
    let data = payload(kb * 1024 * 3 + kb * 512);
    let ids = node.write(ctx, &data)?;
    check(ids.len() == 4, format!("expected 4 blocks, got {}", ids.len()))?;
    check(node.read(&ids)? == data, "read back differs")
}

fn restart_preserves_blocks(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("node.read_only", "false")?;
    let data = payload(3000);
    let ids = {
        let mut node = NodeState::start(ctx)?;
        node.write(ctx, &data)?
    };
    let node = NodeState::start(ctx)?;
    check(node.read(&ids)? == data, "blocks lost across restart")
}

fn read_only_rejects_writes(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("node.read_only", "true")?;
    let mut node = NodeState::start(ctx)?;
    expect_fault(node.write(ctx, b"data"), "write rejection", |f| *f == NodeFault::WriteRejected)
}

fn heartbeat_rejects_short_timeout(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("heartbeat.interval_ms", "1000")?;
    ctx.set("heartbeat.timeout_ms", "2000")?;
    expect_fault(HeartbeatMonitor::from_conf(ctx), "timeout rejection", |f| {
        matches!(f, NodeFault::BadHeartbeatTimeout { .. })
    })
}

fn single_replica_plan(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("replication.factor", "1")?;
    let planner = ReplicaPlanner::from_conf(ctx)?;
    check(planner.plan(7).iter().all(|r| r.len() == 1), "single replica expected")
}

fn fence_rejects_corrupt_key(ctx: &mut TestContext) -> TestOutcome {
    let good = key_file_content(super::FENCE_KEY_HEX);
    write_key_fixture(ctx, "keys/truncated.key", &good.as_bytes()[..good.len() / 2], 0o600)?;
    ctx.set("failover.enabled", "true")?;
    ctx.set("failover.keyfile", "@sandbox/keys/truncated.key")?;
    let mut node = NodeState::start(ctx)?;
    expect_fault(node.fence(ctx), "corrupt key fault", |f| matches!(f, NodeFault::KeyCorrupt(_)))
}

fn fence_rejects_unreadable_key(ctx: &mut TestContext) -> TestOutcome {
    write_key_fixture(ctx, "keys/locked.key", key_file_content(super::FENCE_KEY_HEX).as_bytes(), 0o000)?;
    ctx.set("failover.enabled", "true")?;
    ctx.set("failover.keyfile", "@sandbox/keys/locked.key")?;
    let mut node = NodeState::start(ctx)?;
    expect_fault(node.fence(ctx), "unreadable key fault", |f| matches!(f, NodeFault::KeyUnreadable(_)))
}

fn fence_rejects_missing_key(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("failover.enabled", "true")?;
    ctx.set("failover.keyfile", "@sandbox/keys/absent.key")?;
    let mut node = NodeState::start(ctx)?;
    expect_fault(node.fence(ctx), "missing key fault", |f| matches!(f, NodeFault::KeyMissing(_)))
}

fn fence_skipped_when_disabled(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("failover.enabled", "false")?;
    let mut node = NodeState::start(ctx)?;
    check(node.fence(ctx)? == FenceOutcome::Disabled, "fence ran with failover disabled")
}

fn zlib_roundtrip(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("node.read_only", "false")?;
    ctx.set("storage.compression", "zlib-like")?;
    let mut node = NodeState::start(ctx)?;
    let data: Vec<u8> = (0..20_000).map(|i| (i / 100) as u8).collect();
    let ids = node.write(ctx, &data)?;
    check(node.read(&ids)? == data, "zlib-like round trip differs")
}

fn cache_rejects_oversized(ctx: &mut TestContext) -> TestOutcome {
    ctx.set("memory.heap_mb", "256")?;
    ctx.set("cache.size_mb", "200")?;
    expect_fault(BlockCache::from_conf(ctx), "cache size rejection", |f| matches!(f, NodeFault::CacheTooLarge { .. }))
}

type Body = fn(&mut TestContext) -> TestOutcome;

/// The demo node's existing tests, in suite order.
pub fn demo_suite() -> Vec<TestCase> {
    let tests: [(&str, Body); 24] = [
        ("storage::dir_is_formatted", storage_dir_is_formatted),
        ("node::identity_registered", node_identity_registered),
        ("node::http_port_distinct", http_port_distinct),
        ("replication::plan_covers_blocks", replica_plan_covers_blocks),
        ("replication::plan_balanced", replica_plan_balanced),
        ("heartbeat::timeout_spans_beats", heartbeat_timeout_spans_beats),
        ("heartbeat::detects_dead_peer", heartbeat_detects_dead_peer),
        ("failover::fence_with_configured_key", fence_with_configured_key),
        ("failover::promotes_standby", failover_promotes_standby),
        ("cache::fits_heap", cache_fits_heap),
        ("cache::evicts_lru", cache_evicts_lru),
        ("storage::block_roundtrip", block_roundtrip),
        ("storage::compression_effective", compression_effective),
        ("storage::large_payload_split", large_payload_split),
        ("storage::restart_preserves_blocks", restart_preserves_blocks),
        ("storage::read_only_rejects_writes", read_only_rejects_writes),
        ("heartbeat::rejects_short_timeout", heartbeat_rejects_short_timeout),
        ("replication::single_replica_plan", single_replica_plan),
        ("failover::rejects_corrupt_key", fence_rejects_corrupt_key),
        ("failover::rejects_unreadable_key", fence_rejects_unreadable_key),
        ("failover::rejects_missing_key", fence_rejects_missing_key),
        ("failover::skipped_when_disabled", fence_skipped_when_disabled),
        ("storage::zlib_roundtrip", zlib_roundtrip),
        ("cache::rejects_oversized", cache_rejects_oversized),
    ];
    tests
        .into_iter()
        .map(|(id, body)| {
            let area = id.split("::").next().unwrap_or_default().to_string();
            TestCase::new(id, body).with_tag(area)
        })
        .collect()
}
