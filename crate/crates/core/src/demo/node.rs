//! A miniature replicated storage node.
//!
//! Every component reads its parameters lazily, at the point of use, through
//! the instrumented [`TestContext`]. Values are checked where they are
//! consumed, not when they are parsed.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::harness::{TestContext, TestFailure};
use crate::sandbox::{is_readable, is_writable};

pub const STORAGE_MAGIC: &str = "ctest-storage-v1";
pub const KEY_MAGIC: &str = "CTESTKEY1";
pub const CLUSTER_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeFault {
    #[error("configuration read failed: {0}")]
    Config(String),
    #[error("storage directory {0} does not exist")]
    StorageMissing(PathBuf),
    #[error("storage directory {0} is not formatted")]
    StorageUnformatted(PathBuf),
    #[error("storage directory {0} is not writable")]
    StorageNotWritable(PathBuf),
    #[error("invalid node name {0:?}")]
    InvalidName(String),
    #[error("port {0} is privileged")]
    PrivilegedPort(u16),
    #[error("http port {0} collides with the rpc port")]
    PortConflict(u16),
    #[error("node is read-only")]
    WriteRejected,
    #[error("block size {0} KiB must be a power of two in [4, 1024]")]
    BadBlockSize(i64),
    #[error("block {0} not found")]
    BlockMissing(u64),
    #[error("block {0} is corrupt")]
    BlockCorrupt(u64),
    #[error("replication factor must be positive, got {0}")]
    NonPositiveReplication(i64),
    #[error("replication factor {0} exceeds the {CLUSTER_SIZE} available datanodes")]
    NotEnoughNodes(i64),
    #[error("heartbeat interval {0:?} outside [100ms, 60s]")]
    BadHeartbeatInterval(Duration),
    #[error("heartbeat timeout {timeout:?} must cover three intervals of {interval:?} and stay under 10 min")]
    BadHeartbeatTimeout { interval: Duration, timeout: Duration },
    #[error("fence key {0} does not exist")]
    KeyMissing(PathBuf),
    #[error("fence key {0} is not readable")]
    KeyUnreadable(PathBuf),
    #[error("fence key is malformed: {0}")]
    KeyCorrupt(String),
    #[error("fence timeout {0:?} outside [100ms, 60s]")]
    BadFenceTimeout(Duration),
    #[error("cannot promote without a successful fence")]
    NotFenced,
    #[error("heap size {0} MiB outside [128, 65536]")]
    BadHeap(i64),
    #[error("cache of {cache} MiB does not fit half of the {heap} MiB heap")]
    CacheTooLarge { cache: i64, heap: i64 },
}

impl From<TestFailure> for NodeFault {
    fn from(f: TestFailure) -> Self {
        match f {
            TestFailure::Assertion(msg) | TestFailure::Fault(msg) => NodeFault::Config(msg),
        }
    }
}

impl From<NodeFault> for TestFailure {
    fn from(f: NodeFault) -> Self {
        TestFailure::Fault(f.to_string())
    }
}

impl From<std::io::Error> for NodeFault {
    fn from(e: std::io::Error) -> Self {
        NodeFault::Config(format!("io: {e}"))
    }
}

pub type NodeResult<T> = Result<T, NodeFault>;

/// Parses fence key content: the magic line then 32 lowercase hex digits.
pub fn parse_key(content: &[u8]) -> NodeResult<[u8; 16]> {
    let text = std::str::from_utf8(content).map_err(|_| NodeFault::KeyCorrupt("not utf-8".into()))?;
    let mut lines = text.lines();
    if lines.next() != Some(KEY_MAGIC) {
        return Err(NodeFault::KeyCorrupt("missing header".into()));
    }
    let hex = lines.next().unwrap_or("");
    if hex.len() != 32 || !hex.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        return Err(NodeFault::KeyCorrupt(format!("expected 32 hex digits, got {} bytes", hex.len())));
    }
    if lines.any(|l| !l.is_empty()) {
        return Err(NodeFault::KeyCorrupt("trailing data".into()));
    }
    let mut key = [0u8; 16];
    for (i, byte) in key.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).expect("validated hex");
    }
    Ok(key)
}

pub fn key_file_content(hex: &str) -> String {
    format!("{KEY_MAGIC}\n{hex}\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Codec {
    None,
    Lz4Like,
    ZlibLike,
}

impl Codec {
    fn from_name(name: &str) -> NodeResult<Self> {
        match name {
            "none" => Ok(Codec::None),
            "lz4-like" => Ok(Codec::Lz4Like),
            "zlib-like" => Ok(Codec::ZlibLike),
            other => Err(NodeFault::Config(format!("unknown codec {other}"))),
        }
    }

    fn tag(self) -> u8 {
        match self {
            Codec::None => 0,
            Codec::Lz4Like => 1,
            Codec::ZlibLike => 2,
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Codec::None),
            1 => Some(Codec::Lz4Like),
            2 => Some(Codec::ZlibLike),
            _ => None,
        }
    }

    pub fn compress(self, data: &[u8]) -> Vec<u8> {
        match self {
            Codec::None => data.to_vec(),
            // (run length, byte) pairs, runs capped at 255
            Codec::Lz4Like => {
                let mut out = Vec::new();
                let mut i = 0;
                while i < data.len() {
                    let b = data[i];
                    let mut run = 1;
                    while i + run < data.len() && data[i + run] == b && run < 255 {
                        run += 1;
                    }
                    out.push(run as u8);
                    out.push(b);
                    i += run;
                }
                out
            }
            // (varint run length, byte) pairs
            Codec::ZlibLike => {
                let mut out = Vec::new();
                let mut i = 0;
                while i < data.len() {
                    let b = data[i];
                    let mut run = 1usize;
                    while i + run < data.len() && data[i + run] == b {
                        run += 1;
                    }
                    let mut n = run;
                    loop {
                        let low = (n & 0x7f) as u8;
                        n >>= 7;
                        if n == 0 {
                            out.push(low);
                            break;
                        }
                        out.push(low | 0x80);
                    }
                    out.push(b);
                    i += run;
                }
                out
            }
        }
    }

    pub fn decompress(self, data: &[u8]) -> Option<Vec<u8>> {
        match self {
            Codec::None => Some(data.to_vec()),
            Codec::Lz4Like => {
                if !data.len().is_multiple_of(2) {
                    return None;
                }
                Some(data.chunks(2).flat_map(|c| std::iter::repeat_n(c[1], c[0] as usize)).collect())
            }
            Codec::ZlibLike => {
                let mut out = Vec::new();
                let mut i = 0;
                while i < data.len() {
                    let mut run = 0usize;
                    let mut shift = 0;
                    loop {
                        let b = *data.get(i)?;
                        i += 1;
                        run |= ((b & 0x7f) as usize) << shift;
                        if b & 0x80 == 0 {
                            break;
                        }
                        shift += 7;
                        if shift > 35 {
                            return None;
                        }
                    }
                    let b = *data.get(i)?;
                    i += 1;
                    out.extend(std::iter::repeat_n(b, run));
                }
                Some(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FenceOutcome {
    Fenced { key_id: String, timeout: Duration },
    Disabled,
}

/// A running node.
#[derive(Debug)]
pub struct NodeState {
    pub data_dir: PathBuf,
    pub name: String,
    pub port: u16,
    pub http_port: Option<u16>,
    pub fenced: bool,
    pub leader: bool,
    next_block: u64,
}

fn valid_host_label(name: &str) -> bool {
    (1..=63).contains(&name.len())
        && !name.starts_with('-')
        && !name.ends_with('-')
        && name.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

impl NodeState {
    /// Opens the storage directory and registers the node's identity.
    pub fn start(ctx: &mut TestContext) -> NodeResult<Self> {
        let data_dir = ctx.get_path("node.data_dir")?;
        if !data_dir.is_dir() {
            return Err(NodeFault::StorageMissing(data_dir));
        }
        let version = data_dir.join("VERSION");
        let formatted = is_readable(&version)
            && fs::read_to_string(&version).is_ok_and(|v| v.lines().next() == Some(STORAGE_MAGIC));
        if !formatted {
            return Err(NodeFault::StorageUnformatted(data_dir));
        }
        if !is_writable(&data_dir) {
            return Err(NodeFault::StorageNotWritable(data_dir));
        }

        let name = ctx.get_string("node.name")?;
        if !valid_host_label(&name) {
            return Err(NodeFault::InvalidName(name));
        }
        let port = ctx.get_port("node.port")?;
        if port < 1024 {
            return Err(NodeFault::PrivilegedPort(port));
        }
        fs::write(data_dir.join("in_use.lock"), format!("{name}:{port}\n"))?;
        fs::create_dir_all(data_dir.join("blocks"))?;
        let next_block = fs::read_dir(data_dir.join("blocks"))?.count() as u64;
        Ok(Self { data_dir, name, port, http_port: None, fenced: false, leader: false, next_block })
    }

    pub fn start_http(&mut self, ctx: &mut TestContext) -> NodeResult<u16> {
        let port = ctx.get_port("node.http_port")?;
        if port < 1024 {
            return Err(NodeFault::PrivilegedPort(port));
        }
        if port == self.port {
            return Err(NodeFault::PortConflict(port));
        }
        self.http_port = Some(port);
        Ok(port)
    }

    pub fn membership_entry(&self) -> String {
        format!("{}:{}", self.name, self.port)
    }

    fn block_path(&self, id: u64) -> PathBuf {
        self.data_dir.join("blocks").join(format!("blk_{id:06}"))
    }

    /// Splits `data` into blocks, compresses and stores them. Returns block ids.
    pub fn write(&mut self, ctx: &mut TestContext, data: &[u8]) -> NodeResult<Vec<u64>> {
        if ctx.get_bool("node.read_only")? {
            return Err(NodeFault::WriteRejected);
        }
        let kb = ctx.get_int("storage.block_size_kb")?;
        if !(4..=1024).contains(&kb) || kb.count_ones() != 1 {
            return Err(NodeFault::BadBlockSize(kb));
        }
        let codec = Codec::from_name(&ctx.get_string("storage.compression")?)?;
        let block_bytes = kb as usize * 1024;
        let mut ids = Vec::new();
        for chunk in data.chunks(block_bytes) {
            let id = self.next_block;
            self.next_block += 1;
            let mut payload = vec![codec.tag()];
            payload.extend(codec.compress(chunk));
            fs::write(self.block_path(id), payload)?;
            ids.push(id);
        }
        Ok(ids)
    }

    pub fn read(&self, ids: &[u64]) -> NodeResult<Vec<u8>> {
        let mut out = Vec::new();
        for &id in ids {
            let raw = fs::read(self.block_path(id)).map_err(|_| NodeFault::BlockMissing(id))?;
            let (&tag, body) = raw.split_first().ok_or(NodeFault::BlockCorrupt(id))?;
            let codec = Codec::from_tag(tag).ok_or(NodeFault::BlockCorrupt(id))?;
            out.extend(codec.decompress(body).ok_or(NodeFault::BlockCorrupt(id))?);
        }
        Ok(out)
    }

    pub fn stored_bytes(&self, ids: &[u64]) -> NodeResult<u64> {
        ids.iter()
            .map(|&id| fs::metadata(self.block_path(id)).map(|m| m.len()).map_err(|_| NodeFault::BlockMissing(id)))
            .sum()
    }

    /// Fences the previous active node with the shared key before takeover.
    ///
    /// The key file has to exist, be readable and hold a well-formed key.
    pub fn fence(&mut self, ctx: &mut TestContext) -> NodeResult<FenceOutcome> {
        if !ctx.get_bool("failover.enabled")? {
            return Ok(FenceOutcome::Disabled);
        }
        let keyfile = ctx.get_path("failover.keyfile")?;
        check_key_file(&keyfile)?;
        let key = parse_key(&fs::read(&keyfile)?)?;
        let timeout = ctx.get_duration("failover.fence_timeout_ms")?;
        if !(Duration::from_millis(100)..=Duration::from_secs(60)).contains(&timeout) {
            return Err(NodeFault::BadFenceTimeout(timeout));
        }
        self.fenced = true;
        let key_id = key[..4].iter().map(|b| format!("{b:02x}")).collect();
        Ok(FenceOutcome::Fenced { key_id, timeout })
    }

    pub fn promote(&mut self) -> NodeResult<()> {
        if !self.fenced {
            return Err(NodeFault::NotFenced);
        }
        self.leader = true;
        Ok(())
    }
}

pub fn check_key_file(path: &Path) -> NodeResult<()> {
    if !path.is_file() {
        return Err(NodeFault::KeyMissing(path.to_path_buf()));
    }
    if !is_readable(path) {
        return Err(NodeFault::KeyUnreadable(path.to_path_buf()));
    }
    Ok(())
}

/// Places block replicas on the fixed set of datanodes.
#[derive(Debug, Clone)]
pub struct ReplicaPlanner {
    factor: usize,
}

impl ReplicaPlanner {
    pub fn from_conf(ctx: &mut TestContext) -> NodeResult<Self> {
        let factor = ctx.get_int("replication.factor")?;
        if factor < 1 {
            return Err(NodeFault::NonPositiveReplication(factor));
        }
        if factor as usize > CLUSTER_SIZE {
            return Err(NodeFault::NotEnoughNodes(factor));
        }
        Ok(Self { factor: factor as usize })
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    /// Round-robin placement; replicas of one block land on distinct nodes.
    pub fn plan(&self, blocks: usize) -> Vec<Vec<usize>> {
        (0..blocks).map(|b| (0..self.factor).map(|r| (b * self.factor + r) % CLUSTER_SIZE).collect()).collect()
    }

    pub fn loads(&self, plan: &[Vec<usize>]) -> [usize; CLUSTER_SIZE] {
        let mut loads = [0; CLUSTER_SIZE];
        for replicas in plan {
            for &n in replicas {
                loads[n] += 1;
            }
        }
        loads
    }
}

#[derive(Debug, Clone)]
pub struct HeartbeatMonitor {
    pub interval: Duration,
    pub timeout: Duration,
}

impl HeartbeatMonitor {
    pub fn from_conf(ctx: &mut TestContext) -> NodeResult<Self> {
        let interval = ctx.get_duration("heartbeat.interval_ms")?;
        if !(Duration::from_millis(100)..=Duration::from_secs(60)).contains(&interval) {
            return Err(NodeFault::BadHeartbeatInterval(interval));
        }
        let timeout = ctx.get_duration("heartbeat.timeout_ms")?;
        if timeout < interval * 3 || timeout > Duration::from_secs(600) {
            return Err(NodeFault::BadHeartbeatTimeout { interval, timeout });
        }
        Ok(Self { interval, timeout })
    }

    pub fn is_dead(&self, last_beat: Duration, now: Duration) -> bool {
        now.saturating_sub(last_beat) > self.timeout
    }

    /// Beats a live peer sends within one timeout window.
    pub fn beats_per_window(&self) -> u128 {
        self.timeout.as_millis() / self.interval.as_millis()
    }
}

/// LRU block cache sized from the heap budget, one entry per 256 KiB.
#[derive(Debug)]
pub struct BlockCache {
    capacity: usize,
    order: VecDeque<u64>,
    entries: BTreeMap<u64, Vec<u8>>,
}

impl BlockCache {
    pub fn from_conf(ctx: &mut TestContext) -> NodeResult<Self> {
        let heap = ctx.get_int("memory.heap_mb")?;
        if !(128..=65536).contains(&heap) {
            return Err(NodeFault::BadHeap(heap));
        }
        let cache = ctx.get_int("cache.size_mb")?;
        if cache < 1 || cache > heap / 2 {
            return Err(NodeFault::CacheTooLarge { cache, heap });
        }
        Ok(Self { capacity: cache as usize * 4, order: VecDeque::new(), entries: BTreeMap::new() })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn insert(&mut self, id: u64, data: Vec<u8>) {
        if self.entries.insert(id, data).is_some() {
            self.order.retain(|&x| x != id);
        }
        self.order.push_back(id);
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.entries.remove(&old);
            }
        }
    }

    pub fn get(&mut self, id: u64) -> Option<&Vec<u8>> {
        if self.entries.contains_key(&id) {
            self.order.retain(|&x| x != id);
            self.order.push_back(id);
        }
        self.entries.get(&id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
