use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::basechain::{ChainParams, ChainRegistry, Ledger, LedgerError, Txid};
use crate::channel::{open_channel, Channel, ChannelError, ChannelState, EventKind, OpenParams, Side};
use crate::crypto::{PaymentHash, Preimage};
use crate::htlc::{atomic_swap, HtlcId, Invoice, InvoiceBook, SwapError, SwapOutcome, SwapTerms};
use crate::{AssetId, ChannelId, NodeId};

use super::graph::{ChannelGraph, FeePolicy};
use super::onion::{build_onion, peel_onion, HopPayload, OnionError};
use super::pathfind::{find_route_excluding, Route, RouteError, RouteParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("no ledger for asset {0}")]
    UnknownAsset(AssetId),
    #[error("unknown channel {0}")]
    UnknownChannel(ChannelId),
    #[error("channel {0} already exists")]
    DuplicateChannel(ChannelId),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Swap(SwapError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaymentError {
    #[error(transparent)]
    NoRoute(#[from] RouteError),
    #[error("no ledger for asset {0}")]
    UnknownAsset(AssetId),
    #[error("could not lock hop {hop} on {channel}: {reason}")]
    HtlcLockFailed {
        hop: usize,
        channel: ChannelId,
        reason: ChannelError,
    },
    #[error("hop {hop} rejected the onion: {reason}")]
    Onion { hop: usize, reason: OnionError },
    #[error("hop {hop} received instructions inconsistent with its HTLC")]
    Rejected { hop: usize },
    #[error("payment stalled with {locked} HTLCs locked; they are refunded at expiry")]
    Timeout { locked: usize },
}

#[derive(Debug, Clone, Default)]
pub struct SendOptions {
    /// This node keeps the HTLC locked to it and forwards nothing, so the
    /// payment can only end through expiry.
    pub drop_after_lock: Option<NodeId>,
    /// Extra attempts after a lock failure, each avoiding the channels that
    /// failed before.
    pub max_retries: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaymentSuccess {
    pub preimage: Preimage,
    pub fees_paid_msat: u64,
    pub hops: usize,
    pub route: Route,
    /// Channels actually used, source side first.
    pub channels: Vec<ChannelId>,
}

/// HTLCs of a stalled payment, upstream first.
#[derive(Debug, Clone)]
struct Stuck {
    asset: AssetId,
    locked: Vec<(ChannelId, HtlcId)>,
}

/// Channels, ledgers and the public graph, driven as one deterministic
/// system.
#[derive(Debug, Clone)]
pub struct Network {
    graph: ChannelGraph,
    channels: BTreeMap<ChannelId, Channel>,
    by_pair: BTreeMap<(NodeId, NodeId), Vec<ChannelId>>,
    by_node: BTreeMap<NodeId, Vec<ChannelId>>,
    policies: BTreeMap<ChannelId, FeePolicy>,
    opening: BTreeSet<ChannelId>,
    watching: BTreeSet<ChannelId>,
    chains: ChainRegistry,
    invoices: InvoiceBook,
    stuck: Vec<Stuck>,
    rng: ChaCha20Rng,
    tick: u64,
    cheat_attempts: u64,
    pub route_params: RouteParams,
    pub auto_punish: bool,
}

fn pair(a: &NodeId, b: &NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl Network {
    pub fn new(seed: u64) -> Self {
        Self {
            graph: ChannelGraph::new(),
            channels: BTreeMap::new(),
            by_pair: BTreeMap::new(),
            by_node: BTreeMap::new(),
            policies: BTreeMap::new(),
            opening: BTreeSet::new(),
            watching: BTreeSet::new(),
            chains: ChainRegistry::new(),
            invoices: InvoiceBook::new(),
            stuck: Vec::new(),
            rng: ChaCha20Rng::seed_from_u64(seed),
            tick: 0,
            cheat_attempts: 0,
            route_params: RouteParams::default(),
            auto_punish: true,
        }
    }

    pub fn add_chain(&mut self, params: ChainParams) -> Result<(), NetworkError> {
        self.chains.register_chain(params)?;
        Ok(())
    }

    pub fn add_node(&mut self, node: NodeId) {
        self.graph.add_node(node);
    }

    pub fn graph(&self) -> &ChannelGraph {
        &self.graph
    }

    pub fn chains(&self) -> &ChainRegistry {
        &self.chains
    }

    pub fn ledger(&self, asset: &AssetId) -> Option<&Ledger> {
        self.chains.get(asset)
    }

    pub fn ledger_mut(&mut self, asset: &AssetId) -> Option<&mut Ledger> {
        self.chains.get_mut(asset)
    }

    pub fn channel(&self, id: &ChannelId) -> Option<&Channel> {
        self.channels.get(id)
    }

    pub fn channels(&self) -> impl Iterator<Item = &Channel> {
        self.channels.values()
    }

    pub fn channels_of(&self, node: &NodeId) -> impl Iterator<Item = &Channel> {
        self.by_node
            .get(node)
            .into_iter()
            .flatten()
            .map(|id| &self.channels[id])
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Clock value stamped on channel events from now on.
    pub fn set_tick(&mut self, tick: u64) {
        self.tick = tick;
    }

    /// Payments stalled with HTLCs still locked.
    pub fn inflight_payments(&self) -> usize {
        self.stuck.len()
    }

    /// Revoked commitments broadcast so far.
    pub fn cheat_attempts(&self) -> u64 {
        self.cheat_attempts
    }

    /// Channels closed by a penalty.
    pub fn cheats_punished(&self) -> u64 {
        self.channels
            .values()
            .filter(|c| matches!(c.state(), ChannelState::Punished { .. }))
            .count() as u64
    }

    /// Channels whose revoked commitment was swept by the cheater.
    pub fn cheats_succeeded(&self) -> u64 {
        self.channels
            .values()
            .filter(|c| {
                c.trace()
                    .iter()
                    .any(|e| matches!(e.event, EventKind::CheatSucceeded { .. }))
            })
            .count() as u64
    }

    /// Σ completed off-chain transfers over all channels.
    pub fn offchain_update_count(&self) -> u64 {
        self.channels.values().map(|c| c.offchain_transfers()).sum()
    }

    /// Issues an invoice payable to `destination` with a fresh preimage.
    pub fn create_invoice(&mut self, destination: &NodeId, asset: &AssetId, amount_msat: u64) -> Invoice {
        let preimage = Preimage::random(&mut self.rng);
        self.invoices
            .issue(destination.clone(), asset.clone(), amount_msat, preimage)
    }

    fn split(&mut self, id: &ChannelId) -> Result<(&mut Channel, &mut Ledger), NetworkError> {
        let ch = self
            .channels
            .get_mut(id)
            .ok_or_else(|| NetworkError::UnknownChannel(id.clone()))?;
        ch.set_tick(self.tick);
        let ledger = self
            .chains
            .get_mut(ch.asset())
            .ok_or_else(|| NetworkError::UnknownAsset(ch.asset().clone()))?;
        Ok((ch, ledger))
    }

    /// Opens a channel on `asset`'s ledger. It enters the graph once its
    /// funding confirms.
    pub fn open_channel(
        &mut self,
        asset: &AssetId,
        params: OpenParams,
        policy: FeePolicy,
    ) -> Result<ChannelId, NetworkError> {
        if self.channels.contains_key(&params.id) {
            return Err(NetworkError::DuplicateChannel(params.id));
        }
        let ledger = self
            .chains
            .get_mut(asset)
            .ok_or_else(|| NetworkError::UnknownAsset(asset.clone()))?;
        let mut ch = open_channel(ledger, params)?;
        ch.set_tick(self.tick);
        let id = ch.id().clone();
        let [a, b] = ch.nodes().clone();
        self.graph.add_node(a.clone());
        self.graph.add_node(b.clone());
        self.by_pair.entry(pair(&a, &b)).or_default().push(id.clone());
        self.by_node.entry(a).or_default().push(id.clone());
        self.by_node.entry(b).or_default().push(id.clone());
        self.policies.insert(id.clone(), policy);
        self.opening.insert(id.clone());
        self.channels.insert(id.clone(), ch);
        Ok(id)
    }

    /// Mines one block on every ledger, then reacts to what confirmed.
    pub fn mine_all(&mut self) {
        let assets: Vec<AssetId> = self.chains.iter().map(|(a, _)| a.clone()).collect();
        for a in assets {
            self.mine(&a);
        }
    }

    pub fn mine(&mut self, asset: &AssetId) -> Vec<Txid> {
        let Some(ledger) = self.chains.get_mut(asset) else {
            return Vec::new();
        };
        let mined = ledger.mine_block();
        self.after_block(asset);
        mined
    }

    fn after_block(&mut self, asset: &AssetId) {
        let opening: Vec<ChannelId> = self
            .opening
            .iter()
            .filter(|id| self.channels[*id].asset() == asset)
            .cloned()
            .collect();
        for id in opening {
            let (ch, ledger) = self.split(&id).expect("tracked channel");
            if ch.confirm_funding(ledger).is_ok() {
                let live = ch.is_open() && ch.is_online(Side::A) && ch.is_online(Side::B);
                self.opening.remove(&id);
                if live {
                    self.publish(&id);
                }
            }
        }
        self.resolve_stuck(asset);
        let watching: Vec<ChannelId> = self
            .watching
            .iter()
            .filter(|id| self.channels[*id].asset() == asset)
            .cloned()
            .collect();
        for id in watching {
            if self.watch(&id) {
                self.watching.remove(&id);
            }
        }
    }

    fn publish(&mut self, id: &ChannelId) {
        let ch = &self.channels[id];
        self.graph.add_edge(
            id.clone(),
            ch.node(Side::A).clone(),
            ch.node(Side::B).clone(),
            ch.asset().clone(),
            ch.capacity_msat(),
            self.policies[id],
        );
    }

    /// Acts for the parties of a closing channel: punishes revoked
    /// broadcasts, sweeps delayed outputs and resolves HTLC outputs.
    /// Returns true once nothing is left to do.
    fn watch(&mut self, id: &ChannelId) -> bool {
        let auto_punish = self.auto_punish;
        let preimages: BTreeMap<PaymentHash, Preimage> = {
            let ch = &self.channels[id];
            let Some(b) = ch.broadcast() else {
                return true;
            };
            let c = ch.commitment(b.holder, b.version).expect("broadcast commitment is kept");
            c.htlc_outputs
                .iter()
                .map(|o| &o.params)
                .filter_map(|h| {
                    let receiver = ch.node(h.offerer.other());
                    self.invoices
                        .preimage_for(receiver, &h.payment_hash)
                        .or_else(|| self.learned(&h.payment_hash))
                        .map(|p| (h.payment_hash, p))
                })
                .collect()
        };
        let reachable = {
            let ch = &self.channels[id];
            let [a, b] = ch.nodes();
            [self.graph.is_online(a), self.graph.is_online(b)]
        };
        let (ch, ledger) = self.split(id).expect("tracked channel");
        let present = |ch: &Channel, side: Side| ch.is_online(side) && reachable[side.idx()];
        let Some(b) = ch.broadcast() else {
            return true;
        };
        if matches!(ch.state(), ChannelState::Punished { .. }) {
            return true;
        }
        if ledger.confirmation_height(&b.txid).is_none() {
            return false;
        }
        let victim = b.holder.other();
        let revoked = ch
            .party(victim)
            .received_revocations()
            .contains_key(&b.version);
        if revoked && auto_punish && present(ch, victim) {
            match ch.punish(victim, ledger) {
                Ok(_) | Err(ChannelError::NothingToSweep) => return true,
                Err(_) => {}
            }
        }
        let mut done = true;
        let c = ch
            .commitment(b.holder, b.version)
            .expect("broadcast commitment is kept")
            .clone();
        if let Some(vout) = c.holder_vout {
            let op = crate::basechain::OutPoint::new(b.txid, vout);
            if ledger.utxo(&op).is_some() {
                done = false;
                if present(ch, b.holder) {
                    if let Err(ChannelError::NothingToSweep) = ch.sweep_delayed(b.holder, ledger) { done = true }
                }
            }
        }
        for h in &c.htlc_outputs {
            let op = crate::basechain::OutPoint::new(b.txid, h.vout);
            if ledger.utxo(&op).is_none() {
                continue;
            }
            let id = h.params.htlc_id;
            let receiver = h.params.offerer.other();
            let claimable = preimages
                .get(&h.params.payment_hash)
                .filter(|_| present(ch, receiver));
            let res = match claimable {
                Some(p) if ledger.height() + 1 < h.params.expiry_height => {
                    ch.claim_htlc_onchain(id, *p, ledger)
                }
                _ if present(ch, h.params.offerer) => ch.refund_htlc_onchain(id, ledger),
                _ => Err(ChannelError::PartyOffline(h.params.offerer)),
            };
            if !matches!(res, Err(ChannelError::NothingToSweep)) {
                done = false;
            }
        }
        done
    }

    fn learned(&self, hash: &PaymentHash) -> Option<Preimage> {
        self.channels.values().find_map(|c| c.learned_preimage(hash))
    }

    fn resolve_stuck(&mut self, asset: &AssetId) {
        let Some(height) = self.chains.get(asset).map(|l| l.height()) else {
            return;
        };
        let mut stuck = std::mem::take(&mut self.stuck);
        stuck.retain_mut(|s| {
            if &s.asset != asset {
                return true;
            }
            while let Some((cid, hid)) = s.locked.last().cloned() {
                let Some(ch) = self.channels.get_mut(&cid) else {
                    s.locked.pop();
                    continue;
                };
                ch.set_tick(self.tick);
                if !ch.is_open() || ch.pending_htlc(hid).is_err() {
                    s.locked.pop();
                    continue;
                }
                if ch.expire_htlc(hid, height).is_err() {
                    break;
                }
                s.locked.pop();
            }
            !s.locked.is_empty()
        });
        self.stuck = stuck;
    }

    /// Open channels from `from` to `to` on `asset`, lowest id first.
    fn channels_between(&self, from: &NodeId, to: &NodeId, asset: &AssetId) -> Vec<ChannelId> {
        self.by_pair
            .get(&pair(from, to))
            .into_iter()
            .flatten()
            .filter(|id| {
                let c = &self.channels[*id];
                c.is_open() && c.asset() == asset
            })
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Pays `invoice` from `src` over a cheapest route. HTLCs are locked hop
    /// by hop as each forwarder opens its onion layer, then settled from the
    /// destination back. Nothing touches a ledger.
    pub fn send_payment(
        &mut self,
        src: &NodeId,
        invoice: &Invoice,
        opts: &SendOptions,
    ) -> Result<PaymentSuccess, PaymentError> {
        let height = self
            .chains
            .get(&invoice.asset_id)
            .ok_or_else(|| PaymentError::UnknownAsset(invoice.asset_id.clone()))?
            .height();
        let params = self.route_params.clone().at_height(height);
        let mut exclude = BTreeSet::new();
        let mut last_failure = None;
        for _ in 0..=opts.max_retries {
            let route = match find_route_excluding(
                &self.graph,
                src,
                &invoice.destination,
                invoice.amount_msat,
                &invoice.asset_id,
                &params,
                &exclude,
            ) {
                Ok(r) => r,
                Err(e) => return Err(last_failure.unwrap_or(PaymentError::NoRoute(e))),
            };
            match self.attempt(&route, invoice, height, opts) {
                Err(PaymentError::HtlcLockFailed {
                    hop,
                    channel,
                    reason,
                }) => {
                    exclude.insert(channel.clone());
                    last_failure = Some(PaymentError::HtlcLockFailed {
                        hop,
                        channel,
                        reason,
                    });
                }
                other => return other,
            }
        }
        Err(last_failure.expect("at least one attempt"))
    }

    fn attempt(
        &mut self,
        route: &Route,
        invoice: &Invoice,
        height: u64,
        opts: &SendOptions,
    ) -> Result<PaymentSuccess, PaymentError> {
        let hash = invoice.payment_hash;
        let asset = &invoice.asset_id;
        let mut packet = build_onion(route, hash, &mut self.rng)
            .map_err(|reason| PaymentError::Onion { hop: 0, reason })?;
        let mut locked: Vec<(ChannelId, HtlcId)> = Vec::new();
        let mut from = route.source.clone();
        let mut to = route.hops[0].node_id.clone();
        let mut named = route.hops[0].channel_id.clone();
        let mut amount = route.hops[0].amount_to_forward_msat;
        let mut expiry = route.hops[0].expiry_height;
        let mut hop = 0usize;
        let preimage = loop {
            let cid = if hop == 0 {
                named.clone()
            } else {
                // the named channel if it can carry the amount, else the
                // lowest-id parallel channel to the same peer that can
                let usable = |id: &ChannelId| {
                    let c = &self.channels[id];
                    c.is_open() && c.balance(c.side_of(&from).expect("pair index")) >= amount
                };
                if usable(&named) {
                    named.clone()
                } else {
                    self.channels_between(&from, &to, asset)
                        .into_iter()
                        .find(|id| usable(id))
                        .unwrap_or_else(|| named.clone())
                }
            };
            let ch = self.channels.get_mut(&cid).expect("indexed channel");
            ch.set_tick(self.tick);
            let side = ch.side_of(&from).expect("channel joins the pair");
            match ch.add_htlc(side, hash, amount, expiry, height) {
                Ok(hid) => locked.push((cid, hid)),
                Err(reason) => {
                    self.fail_back(&locked);
                    return Err(PaymentError::HtlcLockFailed {
                        hop,
                        channel: cid,
                        reason,
                    });
                }
            }
            if opts.drop_after_lock.as_ref() == Some(&to) && to != invoice.destination {
                let n = locked.len();
                self.stuck.push(Stuck {
                    asset: asset.clone(),
                    locked,
                });
                return Err(PaymentError::Timeout { locked: n });
            }
            let peeled = match peel_onion(&packet, &to) {
                Ok(p) => p,
                Err(reason) => {
                    self.fail_back(&locked);
                    return Err(PaymentError::Onion { hop, reason });
                }
            };
            match (peeled.payload, peeled.next) {
                (
                    HopPayload::Forward {
                        next_channel,
                        amount_to_forward_msat,
                        outgoing_expiry,
                    },
                    Some(next),
                ) => {
                    let peer = self
                        .channels
                        .get(&next_channel)
                        .filter(|c| c.asset() == asset)
                        .and_then(|c| c.side_of(&to).map(|s| c.node(s.other()).clone()));
                    let Some(peer) = peer else {
                        self.fail_back(&locked);
                        return Err(PaymentError::Rejected { hop });
                    };
                    if amount_to_forward_msat > amount || outgoing_expiry >= expiry {
                        self.fail_back(&locked);
                        return Err(PaymentError::Rejected { hop });
                    }
                    named = next_channel;
                    from = std::mem::replace(&mut to, peer);
                    amount = amount_to_forward_msat;
                    expiry = outgoing_expiry;
                    packet = next;
                    hop += 1;
                }
                (
                    HopPayload::Final {
                        payment_hash,
                        amount_msat,
                        ..
                    },
                    None,
                ) => {
                    let known = self.invoices.preimage_for(&to, &payment_hash);
                    match known {
                        Some(p)
                            if payment_hash == hash
                                && amount_msat == invoice.amount_msat
                                && amount >= invoice.amount_msat =>
                        {
                            break p
                        }
                        _ => {
                            self.fail_back(&locked);
                            return Err(PaymentError::Rejected { hop });
                        }
                    }
                }
                _ => {
                    self.fail_back(&locked);
                    return Err(PaymentError::Rejected { hop });
                }
            }
        };

        // Each hop settles with the preimage its downstream settlement
        // disclosed.
        let mut known = preimage;
        for (cid, hid) in locked.iter().rev() {
            let ch = self.channels.get_mut(cid).expect("locked channel");
            ch.set_tick(self.tick);
            ch.settle_htlc(*hid, known, height)
                .expect("HTLC settles before expiry with its preimage");
            known = ch.learned_preimage(&hash).expect("just settled");
        }
        Ok(PaymentSuccess {
            preimage: known,
            fees_paid_msat: route.fees_msat(),
            hops: route.hops.len(),
            route: route.clone(),
            channels: locked.into_iter().map(|(c, _)| c).collect(),
        })
    }

    /// Removes locked HTLCs, downstream first.
    fn fail_back(&mut self, locked: &[(ChannelId, HtlcId)]) {
        for (cid, hid) in locked.iter().rev() {
            let ch = self.channels.get_mut(cid).expect("locked channel");
            ch.set_tick(self.tick);
            ch.fail_htlc(*hid).expect("counterparties are online");
        }
    }

    /// A direct off-chain transfer over one channel.
    pub fn transfer(&mut self, id: &ChannelId, payer: &NodeId, amount_msat: u64) -> Result<(), NetworkError> {
        let ch = self
            .channels
            .get_mut(id)
            .ok_or_else(|| NetworkError::UnknownChannel(id.clone()))?;
        ch.set_tick(self.tick);
        let side = ch
            .side_of(payer)
            .ok_or_else(|| NetworkError::UnknownChannel(id.clone()))?;
        ch.update_balance(side, amount_msat)?;
        Ok(())
    }

    /// Swaps across two channels between the same parties on different
    /// assets; see [`crate::htlc::atomic_swap`].
    pub fn swap(
        &mut self,
        x: &ChannelId,
        y: &ChannelId,
        initiator: &NodeId,
        terms: &SwapTerms,
        reveal: bool,
    ) -> Result<SwapOutcome, NetworkError> {
        for id in [x, y] {
            if !self.channels.contains_key(id) {
                return Err(NetworkError::UnknownChannel(id.clone()));
            }
        }
        if x == y {
            return Err(NetworkError::Swap(SwapError::SameAsset));
        }
        let preimage = Preimage::random(&mut self.rng);
        let mut cx = self.channels.remove(x).expect("checked");
        let mut cy = self.channels.remove(y).expect("checked");
        cx.set_tick(self.tick);
        cy.set_tick(self.tick);
        let ledgers = (
            self.chains.get(cx.asset()).cloned(),
            self.chains.get(cy.asset()).cloned(),
        );
        let result = match ledgers {
            (Some(mut lx), Some(mut ly)) if cx.asset() != cy.asset() => {
                let r = atomic_swap((&mut cx, &mut lx), (&mut cy, &mut ly), initiator, terms, preimage, reveal);
                if r.is_ok() {
                    *self.chains.get_mut(cx.asset()).expect("registered") = lx;
                    *self.chains.get_mut(cy.asset()).expect("registered") = ly;
                }
                r.map_err(NetworkError::Swap)
            }
            (Some(_), Some(_)) => Err(NetworkError::Swap(SwapError::SameAsset)),
            _ => Err(NetworkError::UnknownAsset(cx.asset().clone())),
        };
        self.channels.insert(x.clone(), cx);
        self.channels.insert(y.clone(), cy);
        result
    }

    pub fn cooperative_close(&mut self, id: &ChannelId) -> Result<Txid, NetworkError> {
        let (ch, ledger) = self.split(id)?;
        let txid = ch.cooperative_close(ledger)?;
        self.graph.remove_edge(id);
        Ok(txid)
    }

    /// `cheater` publishes its revoked commitment of `version`.
    pub fn broadcast_revoked(
        &mut self,
        id: &ChannelId,
        cheater: &NodeId,
        version: u64,
    ) -> Result<Txid, NetworkError> {
        let (ch, ledger) = self.split(id)?;
        let side = ch
            .side_of(cheater)
            .ok_or_else(|| NetworkError::UnknownChannel(id.clone()))?;
        let txid = ch.broadcast_revoked(side, version, ledger)?;
        self.cheat_attempts += 1;
        self.graph.remove_edge(id);
        self.watching.insert(id.clone());
        Ok(txid)
    }

    /// Takes `node` offline. Its channels with an online peer are closed
    /// unilaterally by that peer; channels whose peer is offline too are
    /// frozen. Both kinds leave the graph. Returns the affected channels.
    pub fn node_offline(&mut self, node: &NodeId) -> Vec<ChannelId> {
        self.graph.set_online(node, false);
        let ids = self.by_node.get(node).cloned().unwrap_or_default();
        let mut affected = Vec::new();
        for id in ids {
            let (ch, ledger) = self.split(&id).expect("indexed channel");
            let side = ch.side_of(node).expect("indexed channel");
            if !ch.is_online(side) {
                continue;
            }
            let was_open = ch.is_open();
            if !was_open {
                ch.set_online(side, false);
                continue;
            }
            if ch.on_party_offline(side, ledger).is_ok() {
                self.watching.insert(id.clone());
            }
            if self.graph.remove_edge(&id) {
                affected.push(id);
            }
        }
        affected
    }

    /// Brings `node` back. Frozen channels whose parties are both online
    /// again rejoin the graph; closed channels stay closed.
    pub fn node_online(&mut self, node: &NodeId) {
        self.graph.set_online(node, true);
        let ids = self.by_node.get(node).cloned().unwrap_or_default();
        for id in ids {
            let ch = self.channels.get_mut(&id).expect("indexed channel");
            let side = ch.side_of(node).expect("indexed channel");
            ch.set_online(side, true);
            if ch.is_open() && ch.is_online(side.other()) && !self.opening.contains(&id) {
                self.publish(&id);
            }
        }
    }

    /// Hides or shows a node to path-finding without touching its channels.
    pub fn set_reachable(&mut self, node: &NodeId, reachable: bool) {
        self.graph.set_online(node, reachable);
    }
}
