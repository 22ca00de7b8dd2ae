//! Scenario files.
//!
//! A scenario is a TOML document whose tables map one-to-one onto
//! [`ScenarioConfig`]. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! duration_ticks = 1200
//!
//! [[chains]]
//! asset = "BTC"
//! tps = 7
//! block_interval_secs = 600
//!
//! [nodes]
//! names = ["alice", "bob"]
//!
//! [topology]
//! kind = "explicit"
//! edges = [{ id = "ch-ab", a = "alice", b = "bob", capacity_msat = 2000000000000 }]
//!
//! [[workload.payments]]
//! tick = 1
//! from = "alice"
//! to = "bob"
//! amount_msat = 1000
//!
//! [[events]]
//! kind = "node_offline"
//! tick = 5
//! nodes = ["bob"]
//! ```

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::channel::{DEFAULT_LIVENESS_TIMEOUT_TICKS, DEFAULT_TO_SELF_DELAY};
use crate::htlc::DEFAULT_DELTA_BLOCKS;

/// Node count, channel count and total capacity of the reference snapshot.
pub const SNAPSHOT_NODES: usize = 5_788;
pub const SNAPSHOT_CHANNELS: usize = 23_021;
pub const SNAPSHOT_CAPACITY_MSAT: u64 = 61_851_000_000_000;
pub const SNAPSHOT_ACTIVE_NODES: usize = 2_870;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("scenario not found: {0}")]
    NotFound(String),
    #[error("scenario does not parse: {0}")]
    Parse(String),
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
}

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub duration_ticks: u64,
    #[serde(default = "default_chains")]
    pub chains: Vec<ChainConfig>,
    pub nodes: NodesConfig,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub capacity: CapacityRange,
    #[serde(default)]
    pub fees: FeeConfig,
    #[serde(default)]
    pub routing: RoutingConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub workload: Workload,
    #[serde(default)]
    pub events: Vec<EventConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub asset: String,
    #[serde(default = "default_tps")]
    pub tps: u64,
    #[serde(default = "default_interval")]
    pub block_interval_secs: u64,
}

fn default_tps() -> u64 {
    7
}

fn default_interval() -> u64 {
    600
}

fn default_chains() -> Vec<ChainConfig> {
    vec![ChainConfig {
        asset: "BTC".into(),
        tps: default_tps(),
        block_interval_secs: default_interval(),
    }]
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodesConfig {
    /// Generates `node-0000`, `node-0001`, ...
    pub count: Option<usize>,
    pub names: Option<Vec<String>>,
    /// How many nodes carry the active flag; all of them if absent.
    pub active: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    Explicit {
        #[serde(default)]
        edges: Vec<EdgeConfig>,
    },
    Random {
        edge_count: usize,
    },
    /// Degree-proportional attachment with capacities scaled to an exact
    /// total.
    Snapshot {
        #[serde(default = "snapshot_channels")]
        channels: usize,
        #[serde(default = "snapshot_capacity")]
        total_capacity_msat: u64,
    },
}

fn snapshot_channels() -> usize {
    SNAPSHOT_CHANNELS
}

fn snapshot_capacity() -> u64 {
    SNAPSHOT_CAPACITY_MSAT
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub id: Option<String>,
    pub a: String,
    pub b: String,
    pub asset: Option<String>,
    /// Split evenly unless both funding amounts are given.
    pub capacity_msat: Option<u64>,
    pub fund_a_msat: Option<u64>,
    pub fund_b_msat: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityRange {
    pub min_msat: u64,
    pub max_msat: u64,
}

impl Default for CapacityRange {
    fn default() -> Self {
        Self {
            min_msat: 1_000_000_000,
            max_msat: 10_000_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeeConfig {
    pub base_msat: u64,
    pub ppm: u64,
}

impl Default for FeeConfig {
    fn default() -> Self {
        Self {
            base_msat: 1_000,
            ppm: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingConfig {
    pub hop_penalty_msat: u64,
    pub delta_blocks: u64,
    pub final_expiry_delta: u64,
    pub max_hops: usize,
    pub max_retries: u32,
    /// Latency each hop adds to a payment, in ticks.
    pub hop_latency_ticks: u64,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        Self {
            hop_penalty_msat: 1,
            delta_blocks: DEFAULT_DELTA_BLOCKS,
            final_expiry_delta: DEFAULT_DELTA_BLOCKS,
            max_hops: crate::routing::MAX_ROUTE_HOPS,
            max_retries: 0,
            hop_latency_ticks: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub to_self_delay: u32,
    pub liveness_timeout_ticks: u64,
    pub auto_punish: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            to_self_delay: DEFAULT_TO_SELF_DELAY,
            liveness_timeout_ticks: DEFAULT_LIVENESS_TIMEOUT_TICKS,
            auto_punish: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Workload {
    /// Send every payment as a base-chain transaction instead.
    pub onchain: bool,
    pub payments: Vec<PaymentConfig>,
    pub random: Option<RandomWorkload>,
    pub transfers: Vec<TransferConfig>,
    pub closes: Vec<CloseConfig>,
    pub swaps: Vec<SwapConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaymentConfig {
    pub tick: u64,
    pub from: String,
    pub to: String,
    pub amount_msat: u64,
    #[serde(default = "one")]
    pub count: u64,
    pub asset: Option<String>,
    /// Node that withholds the payment after its HTLC is locked.
    pub drop_after_lock: Option<String>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomWorkload {
    pub start_tick: u64,
    pub ticks: u64,
    pub payments_per_tick: u64,
    pub min_amount_msat: u64,
    pub max_amount_msat: u64,
    /// Draw endpoints from active nodes only.
    #[serde(default = "yes")]
    pub active_only: bool,
}

fn yes() -> bool {
    true
}

/// Direct off-chain balance updates on one channel.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferConfig {
    pub tick: u64,
    pub channel: String,
    pub from: String,
    pub amount_msat: u64,
    #[serde(default = "one")]
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloseConfig {
    pub tick: u64,
    pub channel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapConfig {
    pub tick: u64,
    pub initiator: String,
    pub channel_x: String,
    pub channel_y: String,
    pub amount_x_msat: u64,
    pub amount_y_msat: u64,
    #[serde(default = "default_delta")]
    pub delta_blocks: u64,
    #[serde(default = "yes")]
    pub reveal: bool,
}

fn default_delta() -> u64 {
    DEFAULT_DELTA_BLOCKS
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventConfig {
    NodeOffline { tick: u64, nodes: Vec<String> },
    NodeOnline { tick: u64, nodes: Vec<String> },
    ForceBroadcastRevoked {
        tick: u64,
        node: String,
        channel: String,
        version: u64,
    },
    /// Takes a seeded uniform sample of this fraction of all nodes offline
    /// at once.
    OfflineFraction { tick: u64, fraction: f64 },
}

impl EventConfig {
    pub fn tick(&self) -> u64 {
        match self {
            EventConfig::NodeOffline { tick, .. }
            | EventConfig::NodeOnline { tick, .. }
            | EventConfig::ForceBroadcastRevoked { tick, .. }
            | EventConfig::OfflineFraction { tick, .. } => *tick,
        }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|_| ConfigError::NotFound(path.display().to_string()))?;
        Self::parse(&text)
    }

    /// Node names in index order.
    pub fn node_names(&self) -> Vec<String> {
        match (&self.nodes.names, self.nodes.count) {
            (Some(names), _) => names.clone(),
            (None, Some(n)) => (0..n).map(|i| format!("node-{i:04}")).collect(),
            (None, None) => match self.topology {
                TopologyConfig::Snapshot { .. } => {
                    (0..SNAPSHOT_NODES).map(|i| format!("node-{i:04}")).collect()
                }
                _ => Vec::new(),
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.chains.is_empty() {
            return Err(invalid("chains", "at least one chain is required"));
        }
        let mut assets = std::collections::BTreeSet::new();
        for (i, c) in self.chains.iter().enumerate() {
            if !assets.insert(c.asset.as_str()) {
                return Err(invalid(format!("chains[{i}].asset"), "duplicate asset"));
            }
            if c.tps == 0 {
                return Err(invalid(format!("chains[{i}].tps"), "must be positive"));
            }
            if c.block_interval_secs == 0 {
                return Err(invalid(format!("chains[{i}].block_interval_secs"), "must be positive"));
            }
        }
        if self.nodes.count.is_some() && self.nodes.names.is_some() {
            return Err(invalid("nodes", "give either count or names"));
        }
        let names = self.node_names();
        if names.len() < 2 {
            return Err(invalid("nodes", "at least two nodes are needed (no peer)"));
        }
        let unique: std::collections::BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(invalid("nodes.names", "duplicate node name"));
        }
        if let Some(a) = self.nodes.active {
            if a > names.len() {
                return Err(invalid("nodes.active", "exceeds the node count"));
            }
        }
        if self.capacity.min_msat < 2 || self.capacity.min_msat > self.capacity.max_msat {
            return Err(invalid("capacity", "need 2 <= min_msat <= max_msat"));
        }
        let known = |n: &str| unique.contains(&n.to_string());
        match &self.topology {
            TopologyConfig::Explicit { edges } => {
                for (i, e) in edges.iter().enumerate() {
                    let field = |f: &str| format!("topology.edges[{i}].{f}");
                    if !known(&e.a) {
                        return Err(invalid(field("a"), format!("unknown node {}", e.a)));
                    }
                    if !known(&e.b) {
                        return Err(invalid(field("b"), format!("unknown node {}", e.b)));
                    }
                    if e.a == e.b {
                        return Err(invalid(field("b"), "a channel needs two distinct nodes"));
                    }
                    if let Some(a) = &e.asset {
                        if !assets.contains(a.as_str()) {
                            return Err(invalid(field("asset"), format!("no chain for {a}")));
                        }
                    }
                    let cap = match (e.fund_a_msat, e.fund_b_msat, e.capacity_msat) {
                        (Some(fa), Some(fb), None) => fa + fb,
                        (Some(fa), Some(fb), Some(c)) if fa + fb == c => c,
                        (None, None, Some(c)) => c,
                        _ => {
                            return Err(invalid(
                                field("capacity_msat"),
                                "give capacity_msat, or fund_a_msat and fund_b_msat summing to it",
                            ))
                        }
                    };
                    if cap < 2 {
                        return Err(invalid(field("capacity_msat"), "must be at least 2 msat"));
                    }
                }
            }
            TopologyConfig::Random { edge_count } => {
                let n = names.len();
                if *edge_count > n * (n - 1) / 2 {
                    return Err(invalid("topology.edge_count", "more edges than node pairs"));
                }
            }
            TopologyConfig::Snapshot {
                channels,
                total_capacity_msat,
            } => {
                let n = names.len();
                if *channels < n - 1 || *channels > n * (n - 1) / 2 {
                    return Err(invalid("topology.channels", "must connect every node without parallel edges"));
                }
                if *total_capacity_msat < 2 * *channels as u64 {
                    return Err(invalid("topology.total_capacity_msat", "below 2 msat per channel"));
                }
            }
        }
        if self.routing.hop_penalty_msat == 0 {
            return Err(invalid("routing.hop_penalty_msat", "must be at least 1"));
        }
        if self.routing.max_hops == 0 || self.routing.max_hops > crate::routing::MAX_ROUTE_HOPS {
            return Err(invalid("routing.max_hops", "must be between 1 and 20"));
        }
        for (i, p) in self.workload.payments.iter().enumerate() {
            let field = |f: &str| format!("workload.payments[{i}].{f}");
            if !known(&p.from) {
                return Err(invalid(field("from"), format!("unknown node {}", p.from)));
            }
            if !known(&p.to) {
                return Err(invalid(field("to"), format!("unknown node {}", p.to)));
            }
            if p.amount_msat == 0 {
                return Err(invalid(field("amount_msat"), "must be at least 1 msat"));
            }
            if let Some(a) = &p.asset {
                if !assets.contains(a.as_str()) {
                    return Err(invalid(field("asset"), format!("no chain for {a}")));
                }
            }
        }
        if let Some(r) = &self.workload.random {
            if r.min_amount_msat == 0 || r.min_amount_msat > r.max_amount_msat {
                return Err(invalid("workload.random", "need 1 <= min_amount_msat <= max_amount_msat"));
            }
        }
        for (i, t) in self.workload.transfers.iter().enumerate() {
            if !known(&t.from) {
                return Err(invalid(format!("workload.transfers[{i}].from"), format!("unknown node {}", t.from)));
            }
        }
        for (i, s) in self.workload.swaps.iter().enumerate() {
            if !known(&s.initiator) {
                return Err(invalid(
                    format!("workload.swaps[{i}].initiator"),
                    format!("unknown node {}", s.initiator),
                ));
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            let nodes: Vec<&String> = match e {
                EventConfig::NodeOffline { nodes, .. } | EventConfig::NodeOnline { nodes, .. } => {
                    nodes.iter().collect()
                }
                EventConfig::ForceBroadcastRevoked { node, .. } => vec![node],
                EventConfig::OfflineFraction { fraction, .. } => {
                    if !(0.0..=1.0).contains(fraction) {
                        return Err(invalid(format!("events[{i}].fraction"), "must lie in [0, 1]"));
                    }
                    Vec::new()
                }
            };
            for n in nodes {
                if !known(n) {
                    return Err(invalid(format!("events[{i}]"), format!("unknown node {n}")));
                }
            }
        }
        Ok(())
    }
}
