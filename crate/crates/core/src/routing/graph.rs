use std::collections::BTreeMap;
use std::fmt;

use crate::{AssetId, ChannelId, NodeId};

/// Forwarding fee schedule: `base_msat + floor(amount * proportional_ppm / 1e6)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeePolicy {
    pub base_msat: u64,
    pub proportional_ppm: u64,
}

impl Default for FeePolicy {
    fn default() -> Self {
        Self {
            base_msat: 1_000,
            proportional_ppm: 1,
        }
    }
}

impl FeePolicy {
    pub fn fee(&self, amount_msat: u64) -> u64 {
        let prop = u128::from(amount_msat) * u128::from(self.proportional_ppm) / 1_000_000;
        self.base_msat + prop as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub channel_id: ChannelId,
    pub nodes: [NodeId; 2],
    pub asset: AssetId,
    pub capacity_msat: u64,
    pub policy: FeePolicy,
    pub(crate) ends: [usize; 2],
    pub(crate) active: bool,
}

impl Edge {
    pub fn is_active(&self) -> bool {
        self.active
    }
}

impl fmt::Display for Edge {
    /// `channel_id,node_a,node_b,asset,capacity_msat,base_fee_msat,ppm`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.channel_id,
            self.nodes[0],
            self.nodes[1],
            self.asset,
            self.capacity_msat,
            self.policy.base_msat,
            self.policy.proportional_ppm
        )
    }
}

/// Public view of the channel network used for pathfinding. Nodes are
/// indexed densely in insertion order; removed channels stay in the edge
/// list but are inactive.
#[derive(Debug, Clone, Default)]
pub struct ChannelGraph {
    nodes: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    online: Vec<bool>,
    edges: Vec<Edge>,
    edge_index: BTreeMap<ChannelId, usize>,
    adjacency: Vec<Vec<usize>>,
}

impl ChannelGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: NodeId) -> usize {
        if let Some(&i) = self.index.get(&node) {
            return i;
        }
        let i = self.nodes.len();
        self.index.insert(node.clone(), i);
        self.nodes.push(node);
        self.online.push(true);
        self.adjacency.push(Vec::new());
        i
    }

    /// Adds or reactivates the edge for `channel_id`.
    pub fn add_edge(
        &mut self,
        channel_id: ChannelId,
        a: NodeId,
        b: NodeId,
        asset: AssetId,
        capacity_msat: u64,
        policy: FeePolicy,
    ) {
        if let Some(&e) = self.edge_index.get(&channel_id) {
            self.edges[e].active = true;
            return;
        }
        let ia = self.add_node(a.clone());
        let ib = self.add_node(b.clone());
        let e = self.edges.len();
        self.edges.push(Edge {
            channel_id: channel_id.clone(),
            nodes: [a, b],
            asset,
            capacity_msat,
            policy,
            ends: [ia, ib],
            active: true,
        });
        self.edge_index.insert(channel_id, e);
        self.adjacency[ia].push(e);
        self.adjacency[ib].push(e);
    }

    /// Deactivates the edge; returns whether it was active.
    pub fn remove_edge(&mut self, channel_id: &ChannelId) -> bool {
        match self.edge_index.get(channel_id) {
            Some(&e) => std::mem::replace(&mut self.edges[e].active, false),
            None => false,
        }
    }

    pub fn edge(&self, channel_id: &ChannelId) -> Option<&Edge> {
        self.edge_index.get(channel_id).map(|&e| &self.edges[e])
    }

    pub fn set_online(&mut self, node: &NodeId, online: bool) {
        if let Some(&i) = self.index.get(node) {
            self.online[i] = online;
        }
    }

    pub fn is_online(&self, node: &NodeId) -> bool {
        self.index.get(node).is_some_and(|&i| self.online[i])
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.index.contains_key(node)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn online_count(&self) -> usize {
        self.online.iter().filter(|o| **o).count()
    }

    /// Active edges.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.active)
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn total_capacity_msat(&self) -> u64 {
        self.edges().map(|e| e.capacity_msat).sum()
    }

    /// Active edges touching `node`.
    pub fn channels_of(&self, node: &NodeId) -> Vec<&Edge> {
        match self.index.get(node) {
            Some(&i) => self.adjacency[i]
                .iter()
                .map(|&e| &self.edges[e])
                .filter(|e| e.active)
                .collect(),
            None => Vec::new(),
        }
    }

    /// One line per active edge, in insertion order.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for e in self.edges() {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    pub(crate) fn index_of(&self, node: &NodeId) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub(crate) fn node_at(&self, i: usize) -> &NodeId {
        &self.nodes[i]
    }

    pub(crate) fn online_at(&self, i: usize) -> bool {
        self.online[i]
    }

    pub(crate) fn raw_edges(&self) -> &[Edge] {
        &self.edges
    }

    pub(crate) fn adjacent(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }
}
