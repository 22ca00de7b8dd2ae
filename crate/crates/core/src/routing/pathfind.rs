use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use thiserror::Error;

use super::graph::ChannelGraph;
use crate::{AssetId, ChannelId, NodeId};

/// Longest route that can be expressed, and therefore searched.
pub const MAX_ROUTE_HOPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteParams {
    /// Cost added per hop, in msat; at least 1 so shorter paths win fee
    /// ties.
    pub hop_penalty_msat: u64,
    /// Expiry margin each hop adds upstream.
    pub delta_blocks: u64,
    pub max_hops: usize,
    pub current_height: u64,
    /// Blocks from `current_height` to the last hop's expiry.
    pub final_expiry_delta: u64,
}

impl Default for RouteParams {
    fn default() -> Self {
        Self {
            hop_penalty_msat: 1,
            delta_blocks: crate::htlc::DEFAULT_DELTA_BLOCKS,
            max_hops: MAX_ROUTE_HOPS,
            current_height: 0,
            final_expiry_delta: crate::htlc::DEFAULT_DELTA_BLOCKS,
        }
    }
}

impl RouteParams {
    pub fn at_height(mut self, height: u64) -> Self {
        self.current_height = height;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteHop {
    /// Node receiving this hop.
    pub node_id: NodeId,
    pub channel_id: ChannelId,
    /// Amount carried over `channel_id`, i.e. what `node_id` receives.
    pub amount_to_forward_msat: u64,
    pub expiry_height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub source: NodeId,
    pub destination: NodeId,
    pub hops: Vec<RouteHop>,
}

impl Route {
    /// What the source sends.
    pub fn total_amount_msat(&self) -> u64 {
        self.hops[0].amount_to_forward_msat
    }

    pub fn fees_msat(&self) -> u64 {
        self.total_amount_msat() - self.hops[self.hops.len() - 1].amount_to_forward_msat
    }

    pub fn cost(&self, hop_penalty_msat: u64) -> u64 {
        self.fees_msat() + self.hops.len() as u64 * hop_penalty_msat
    }

    /// Source followed by every hop's node.
    pub fn node_sequence(&self) -> Vec<&NodeId> {
        std::iter::once(&self.source)
            .chain(self.hops.iter().map(|h| &h.node_id))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("source and destination are the same node")]
    SameNode,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no route")]
    NoRoute,
}

const NONE: u32 = u32::MAX;

struct Label {
    node: u32,
    hops: u8,
    amount: u64,
    /// Edge towards `next`.
    edge: u32,
    next: u32,
}

/// Cheapest route for delivering `amount_msat` of `asset` from `src` to
/// `dst`.
///
/// Cost is the total intermediary fee plus `hop_penalty_msat` per hop. An
/// intermediary charges its fee on the edge it forwards over; the source
/// pays none. An edge is usable when it is active, carries `asset`, has
/// capacity for the amount crossing it, and both endpoints are online.
/// Among equal-cost routes the lexicographically smallest node-id sequence
/// wins.
pub fn find_route(
    g: &ChannelGraph,
    src: &NodeId,
    dst: &NodeId,
    amount_msat: u64,
    asset: &AssetId,
    params: &RouteParams,
) -> Result<Route, RouteError> {
    find_route_excluding(g, src, dst, amount_msat, asset, params, &BTreeSet::new())
}

/// [`find_route`] ignoring the channels in `exclude`.
pub fn find_route_excluding(
    g: &ChannelGraph,
    src: &NodeId,
    dst: &NodeId,
    amount_msat: u64,
    asset: &AssetId,
    params: &RouteParams,
    exclude: &BTreeSet<ChannelId>,
) -> Result<Route, RouteError> {
    if src == dst {
        return Err(RouteError::SameNode);
    }
    let s = g
        .index_of(src)
        .ok_or_else(|| RouteError::UnknownNode(src.clone()))?;
    let d = g
        .index_of(dst)
        .ok_or_else(|| RouteError::UnknownNode(dst.clone()))?;
    if !g.online_at(s) || !g.online_at(d) {
        return Err(RouteError::NoRoute);
    }
    let max_hops = params.max_hops.min(MAX_ROUTE_HOPS);
    let penalty = params.hop_penalty_msat.max(1);
    let layers = max_hops + 1;
    let edges = g.raw_edges();

    // Backward search from the destination over (node, hop count) states.
    let mut labels = vec![Label {
        node: d as u32,
        hops: 0,
        amount: amount_msat,
        edge: NONE,
        next: NONE,
    }];
    let mut best = vec![NONE; g.node_count() * layers];
    best[d * layers] = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, 0u32)));
    let mut found: Vec<u32> = Vec::new();
    let mut found_cost = None;

    let cost_of = |l: &Label| (l.amount - amount_msat) + u64::from(l.hops) * penalty;

    while let Some(Reverse((cost, li))) = heap.pop() {
        if let Some(c) = found_cost {
            if cost > c {
                break;
            }
        }
        let (v, h, a) = {
            let l = &labels[li as usize];
            (l.node as usize, l.hops as usize, l.amount)
        };
        if best[v * layers + h] != li {
            continue;
        }
        if v == s {
            found_cost = Some(cost);
            found.push(li);
            continue;
        }
        if h == max_hops {
            continue;
        }
        for &ei in g.adjacent(v) {
            let e = &edges[ei];
            if !e.active || &e.asset != asset || e.capacity_msat < a {
                continue;
            }
            let u = if e.ends[0] == v { e.ends[1] } else { e.ends[0] };
            if u == d || !g.online_at(u) || exclude.contains(&e.channel_id) {
                continue;
            }
            let need = if u == s {
                a
            } else {
                match a.checked_add(e.policy.fee(a)) {
                    Some(n) => n,
                    None => continue,
                }
            };
            let slot = u * layers + h + 1;
            let cur = best[slot];
            let better = cur == NONE || {
                let c = &labels[cur as usize];
                need < c.amount
                    || (need == c.amount
                        && cmp_suffix(g, &labels, li, c.next) == Ordering::Less)
            };
            if better {
                let nl = Label {
                    node: u as u32,
                    hops: (h + 1) as u8,
                    amount: need,
                    edge: ei as u32,
                    next: li,
                };
                let c = cost_of(&nl);
                let idx = labels.len() as u32;
                labels.push(nl);
                best[slot] = idx;
                heap.push(Reverse((c, idx)));
            }
        }
    }

    let winner = found
        .into_iter()
        .min_by(|&x, &y| cmp_suffix(g, &labels, labels[x as usize].next, labels[y as usize].next))
        .ok_or(RouteError::NoRoute)?;

    let mut hops = Vec::new();
    let mut cur = winner;
    while labels[cur as usize].next != NONE {
        let l = &labels[cur as usize];
        let n = &labels[l.next as usize];
        hops.push(RouteHop {
            node_id: g.node_at(n.node as usize).clone(),
            channel_id: edges[l.edge as usize].channel_id.clone(),
            amount_to_forward_msat: n.amount,
            expiry_height: 0,
        });
        cur = l.next;
    }
    let k = hops.len() as u64;
    for (i, hop) in hops.iter_mut().enumerate() {
        hop.expiry_height = params.current_height
            + params.final_expiry_delta
            + (k - 1 - i as u64) * params.delta_blocks;
    }
    Ok(Route {
        source: src.clone(),
        destination: dst.clone(),
        hops,
    })
}

/// Compares the node sequences of two label chains.
fn cmp_suffix(g: &ChannelGraph, labels: &[Label], mut a: u32, mut b: u32) -> Ordering {
    loop {
        match (a == NONE, b == NONE) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (la, lb) = (&labels[a as usize], &labels[b as usize]);
        if la.node != lb.node {
            return g
                .node_at(la.node as usize)
                .cmp(g.node_at(lb.node as usize));
        }
        a = la.next;
        b = lb.next;
    }
}
