use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::basechain::{build_payment, ChainParams, Output, Txid, TX_FEE_MSAT};
use crate::channel::{node_key, OpenParams};
use crate::htlc::SwapTerms;
use crate::routing::{FeePolicy, Network, PaymentError, RouteParams, SendOptions};
use crate::{AssetId, ChannelId, NodeId};

use super::config::{invalid, ConfigError, EventConfig, ScenarioConfig};
use super::metrics::Metrics;
use super::topology::plan_channels;

// Independent random streams derived from the scenario seed.
const STREAM_TOPOLOGY: u64 = 0;
const STREAM_FAILURES: u64 = 1;
const STREAM_WORKLOAD: u64 = 2;
const STREAM_ACTIVE: u64 = 3;

fn stream(seed: u64, n: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(n);
    rng
}

#[derive(Debug, Clone, Default)]
struct PaymentStats {
    attempted: u64,
    succeeded: u64,
    hops: u64,
    latency_ticks: u64,
    fees_msat: u64,
}

#[derive(Debug, Clone)]
struct OnchainPayment {
    asset: AssetId,
    txid: Txid,
    issued: u64,
}

/// What [`World::apply_node_failures`] did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureReport {
    pub offline: Vec<NodeId>,
    /// Channels that left the graph: closed unilaterally, or frozen because
    /// both parties are offline.
    pub removed_channels: Vec<ChannelId>,
    pub capacity_removed_msat: u64,
}

/// A built network plus the bookkeeping of a scenario run.
#[derive(Debug, Clone)]
pub struct World {
    pub network: Network,
    nodes: Vec<NodeId>,
    active: BTreeSet<NodeId>,
    failure_order: Vec<NodeId>,
    block_intervals: Vec<(AssetId, u64)>,
    setup_txids: BTreeSet<Txid>,
    funding_txids: BTreeSet<Txid>,
    onchain_payment_txids: BTreeSet<Txid>,
    onchain_pending: Vec<OnchainPayment>,
    stats: PaymentStats,
    workload_rng: ChaCha20Rng,
    liveness_due: BTreeMap<u64, Vec<NodeId>>,
    liveness_timeout: u64,
    max_retries: u32,
    hop_latency: u64,
    log: Vec<String>,
    tick: u64,
}

/// Builds the ledgers, funds every wallet at genesis, opens every channel
/// and mines until all fundings confirm.
///
/// Nodes that need several coins get them from one preparation
/// transaction each, mined before the channels open; those transactions
/// are not counted in the metrics.
pub fn build_network(cfg: &ScenarioConfig) -> Result<World, ConfigError> {
    cfg.validate()?;
    let names = cfg.node_names();
    let nodes: Vec<NodeId> = names.iter().map(NodeId::new).collect();
    let planned = plan_channels(cfg, &names, &mut stream(cfg.seed, STREAM_TOPOLOGY));

    let mut coins: BTreeMap<(String, usize), Vec<u64>> = BTreeMap::new();
    for c in &planned {
        coins
            .entry((c.asset.clone(), c.a))
            .or_default()
            .push(c.fund_a_msat + TX_FEE_MSAT);
        if c.fund_b_msat > 0 {
            coins.entry((c.asset.clone(), c.b)).or_default().push(c.fund_b_msat);
        }
    }
    if cfg.workload.onchain {
        if cfg.workload.random.is_some() {
            return Err(invalid("workload.random", "not supported with onchain payments"));
        }
        let default_asset = &cfg.chains[0].asset;
        for p in &cfg.workload.payments {
            let asset = p.asset.clone().unwrap_or_else(|| default_asset.clone());
            let from = names.iter().position(|n| n == &p.from).expect("validated");
            let list = coins.entry((asset, from)).or_default();
            list.extend(std::iter::repeat_n(p.amount_msat + TX_FEE_MSAT, p.count as usize));
        }
    }

    let mut network = Network::new(cfg.seed);
    for chain in &cfg.chains {
        let mut params = ChainParams::new(chain.asset.as_str(), chain.tps, chain.block_interval_secs);
        for ((asset, node), list) in &coins {
            if asset == &chain.asset {
                let prep = if list.len() > 1 { TX_FEE_MSAT } else { 0 };
                let key = node_key(&nodes[*node]).public_key();
                params = params.with_allocation(key, list.iter().sum::<u64>() + prep);
            }
        }
        network
            .add_chain(params)
            .map_err(|e| invalid("chains", e.to_string()))?;
    }
    for n in &nodes {
        network.add_node(n.clone());
    }
    network.route_params = RouteParams {
        hop_penalty_msat: cfg.routing.hop_penalty_msat,
        delta_blocks: cfg.routing.delta_blocks,
        max_hops: cfg.routing.max_hops,
        current_height: 0,
        final_expiry_delta: cfg.routing.final_expiry_delta,
    };
    network.auto_punish = cfg.channel.auto_punish;

    let mut setup_txids = BTreeSet::new();
    for ((asset, node), list) in &coins {
        if list.len() < 2 {
            continue;
        }
        let asset = AssetId::new(asset.as_str());
        let sk = node_key(&nodes[*node]);
        let ledger = network.ledger_mut(&asset).expect("registered chain");
        let outputs = list
            .iter()
            .map(|&a| Output::single_key(a, sk.public_key()))
            .collect();
        let tx = build_payment(ledger, &sk, outputs).map_err(|e| invalid("chains", e.to_string()))?;
        setup_txids.insert(
            ledger
                .submit_transaction(tx)
                .map_err(|e| invalid("chains", e.to_string()))?,
        );
    }
    mine_until_empty(&mut network);

    let policy = FeePolicy {
        base_msat: cfg.fees.base_msat,
        proportional_ppm: cfg.fees.ppm,
    };
    let mut funding_txids = BTreeSet::new();
    for (i, c) in planned.iter().enumerate() {
        let params = OpenParams::new(
            c.id.as_str(),
            nodes[c.a].clone(),
            nodes[c.b].clone(),
            c.fund_a_msat,
            c.fund_b_msat,
        )
        .with_delay(cfg.channel.to_self_delay)
        .with_seed(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ i as u64);
        let id = network
            .open_channel(&AssetId::new(c.asset.as_str()), params, policy)
            .map_err(|e| invalid(format!("topology channel {}", c.id), e.to_string()))?;
        funding_txids.insert(network.channel(&id).expect("opened").funding_outpoint().txid);
    }
    mine_until_empty(&mut network);

    let active: BTreeSet<NodeId> = match cfg.nodes.active {
        Some(k) => {
            let mut order = nodes.clone();
            order.shuffle(&mut stream(cfg.seed, STREAM_ACTIVE));
            order.into_iter().take(k).collect()
        }
        None => nodes.iter().cloned().collect(),
    };
    let mut failure_order = nodes.clone();
    failure_order.shuffle(&mut stream(cfg.seed, STREAM_FAILURES));

    Ok(World {
        network,
        nodes,
        active,
        failure_order,
        block_intervals: cfg
            .chains
            .iter()
            .map(|c| (AssetId::new(c.asset.as_str()), c.block_interval_secs))
            .collect(),
        setup_txids,
        funding_txids,
        onchain_payment_txids: BTreeSet::new(),
        onchain_pending: Vec::new(),
        stats: PaymentStats::default(),
        workload_rng: stream(cfg.seed, STREAM_WORKLOAD),
        liveness_due: BTreeMap::new(),
        liveness_timeout: cfg.channel.liveness_timeout_ticks,
        max_retries: cfg.routing.max_retries,
        hop_latency: cfg.routing.hop_latency_ticks,
        log: Vec::new(),
        tick: 0,
    })
}

fn mine_until_empty(network: &mut Network) {
    let assets: Vec<AssetId> = network.chains().iter().map(|(a, _)| a.clone()).collect();
    for a in assets {
        while network.ledger(&a).is_some_and(|l| l.mempool_len() > 0) {
            network.mine(&a);
        }
    }
}

/// Runs the scenario's clock from tick 0 to `duration_ticks - 1`.
///
/// Within a tick: overdue liveness timeouts fire, then scheduled events
/// apply in file order, then the workload (transfers, payments, random
/// payments, swaps, closes), then every chain whose block interval divides
/// the tick mines a block.
pub fn run_scenario(world: &mut World, cfg: &ScenarioConfig) -> Metrics {
    for tick in 0..cfg.duration_ticks {
        world.step(tick, cfg);
    }
    world.collect_metrics()
}

impl World {
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn is_active(&self, node: &NodeId) -> bool {
        self.active.contains(node)
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// One line per payment, event and close, in the order they happened.
    pub fn log(&self) -> &[String] {
        &self.log
    }

    fn note(&mut self, line: String) {
        self.log.push(format!("tick={} {line}", self.tick));
    }

    fn step(&mut self, tick: u64, cfg: &ScenarioConfig) {
        self.tick = tick;
        self.network.set_tick(tick);

        if let Some(due) = self.liveness_due.remove(&tick) {
            for node in due {
                if !self.network.graph().is_online(&node) {
                    let closed = self.network.node_offline(&node);
                    self.note(format!("event=liveness_timeout node={node} channels_removed={}", closed.len()));
                }
            }
        }

        for e in cfg.events.iter().filter(|e| e.tick() == tick) {
            self.apply_event(e);
        }

        let default_asset = AssetId::new(cfg.chains[0].asset.as_str());
        for t in cfg.workload.transfers.iter().filter(|t| t.tick == tick) {
            let id = ChannelId::new(t.channel.as_str());
            let from = NodeId::new(t.from.as_str());
            let mut ok = 0;
            let mut error = None;
            for _ in 0..t.count {
                match self.network.transfer(&id, &from, t.amount_msat) {
                    Ok(()) => ok += 1,
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            let result = error.map_or("ok".to_string(), |e| format!("error:{e}"));
            self.note(format!(
                "event=transfer channel={id} from={from} amount_msat={} done={ok}/{} result={result}",
                t.amount_msat, t.count
            ));
        }
        for p in cfg.workload.payments.iter().filter(|p| p.tick == tick) {
            let asset = p.asset.as_deref().map(AssetId::new).unwrap_or_else(|| default_asset.clone());
            let from = NodeId::new(p.from.as_str());
            let to = NodeId::new(p.to.as_str());
            let drop = p.drop_after_lock.as_deref().map(NodeId::new);
            for _ in 0..p.count {
                if cfg.workload.onchain {
                    self.pay_onchain(&asset, &from, &to, p.amount_msat);
                } else {
                    self.pay(&asset, &from, &to, p.amount_msat, drop.clone());
                }
            }
        }
        if let Some(r) = &cfg.workload.random {
            if tick >= r.start_tick && tick < r.start_tick + r.ticks {
                let pool: Vec<NodeId> = if r.active_only {
                    self.nodes.iter().filter(|n| self.active.contains(*n)).cloned().collect()
                } else {
                    self.nodes.clone()
                };
                for _ in 0..r.payments_per_tick {
                    // all draws happen before any outcome is known
                    let from = pool[self.workload_rng.gen_range(0..pool.len())].clone();
                    let mut to = from.clone();
                    while to == from {
                        to = pool[self.workload_rng.gen_range(0..pool.len())].clone();
                    }
                    let amount = self.workload_rng.gen_range(r.min_amount_msat..=r.max_amount_msat);
                    self.pay(&default_asset, &from, &to, amount, None);
                }
            }
        }
        for s in cfg.workload.swaps.iter().filter(|s| s.tick == tick) {
            let terms = SwapTerms::new(s.amount_x_msat, s.amount_y_msat, s.delta_blocks);
            let result = self.network.swap(
                &ChannelId::new(s.channel_x.as_str()),
                &ChannelId::new(s.channel_y.as_str()),
                &NodeId::new(s.initiator.as_str()),
                &terms,
                s.reveal,
            );
            let result = match result {
                Ok(outcome) => format!("{outcome:?}"),
                Err(e) => format!("error:{e}"),
            };
            self.note(format!(
                "event=swap channel_x={} channel_y={} result={result}",
                s.channel_x, s.channel_y
            ));
        }
        for c in cfg.workload.closes.iter().filter(|c| c.tick == tick) {
            let id = ChannelId::new(c.channel.as_str());
            let result = match self.network.cooperative_close(&id) {
                Ok(txid) => format!("ok txid={}", txid.to_hex()),
                Err(e) => format!("error:{e}"),
            };
            self.note(format!("event=cooperative_close channel={id} result={result}"));
        }

        if tick > 0 {
            let due: Vec<AssetId> = self
                .block_intervals
                .iter()
                .filter(|(_, every)| tick.is_multiple_of(*every))
                .map(|(a, _)| a.clone())
                .collect();
            for asset in due {
                let mined = self.network.mine(&asset);
                self.note(format!("event=block asset={asset} txs={}", mined.len()));
                self.settle_onchain_payments(&asset);
            }
        }
    }

    fn apply_event(&mut self, e: &EventConfig) {
        match e {
            EventConfig::NodeOffline { nodes, .. } => {
                for n in nodes {
                    let node = NodeId::new(n.as_str());
                    self.network.set_reachable(&node, false);
                    self.liveness_due
                        .entry(self.tick + self.liveness_timeout)
                        .or_default()
                        .push(node.clone());
                    self.note(format!("event=node_offline node={node}"));
                }
            }
            EventConfig::NodeOnline { nodes, .. } => {
                for n in nodes {
                    let node = NodeId::new(n.as_str());
                    self.network.node_online(&node);
                    self.note(format!("event=node_online node={node}"));
                }
            }
            EventConfig::ForceBroadcastRevoked {
                node,
                channel,
                version,
                ..
            } => {
                let id = ChannelId::new(channel.as_str());
                let result = match self
                    .network
                    .broadcast_revoked(&id, &NodeId::new(node.as_str()), *version)
                {
                    Ok(txid) => format!("ok txid={}", txid.to_hex()),
                    Err(e) => format!("error:{e}"),
                };
                self.note(format!(
                    "event=broadcast_revoked channel={id} node={node} version={version} result={result}"
                ));
            }
            EventConfig::OfflineFraction { fraction, .. } => {
                let r = self.apply_node_failures(*fraction);
                self.note(format!(
                    "event=offline_fraction fraction={fraction} nodes={} channels_removed={} capacity_removed_msat={}",
                    r.offline.len(),
                    r.removed_channels.len(),
                    r.capacity_removed_msat
                ));
            }
        }
    }

    fn pay(&mut self, asset: &AssetId, from: &NodeId, to: &NodeId, amount: u64, drop: Option<NodeId>) {
        self.stats.attempted += 1;
        let invoice = self.network.create_invoice(to, asset, amount);
        let opts = SendOptions {
            drop_after_lock: drop,
            max_retries: self.max_retries,
        };
        let line = match self.network.send_payment(from, &invoice, &opts) {
            Ok(ok) => {
                self.stats.succeeded += 1;
                self.stats.hops += ok.hops as u64;
                self.stats.fees_msat += ok.fees_paid_msat;
                self.stats.latency_ticks += ok.hops as u64 * self.hop_latency;
                format!("result=ok hops={} fees_msat={}", ok.hops, ok.fees_paid_msat)
            }
            Err(PaymentError::Timeout { locked }) => format!("result=stalled locked={locked}"),
            Err(e) => format!("result=failed reason=\"{e}\""),
        };
        self.note(format!("event=payment from={from} to={to} amount_msat={amount} {line}"));
    }

    fn pay_onchain(&mut self, asset: &AssetId, from: &NodeId, to: &NodeId, amount: u64) {
        self.stats.attempted += 1;
        let sk = node_key(from);
        let payee = node_key(to).public_key();
        let Some(ledger) = self.network.ledger_mut(asset) else {
            self.note(format!("event=onchain_payment from={from} to={to} result=failed reason=\"unknown asset\""));
            return;
        };
        let submitted = build_payment(ledger, &sk, vec![Output::single_key(amount, payee)])
            .and_then(|tx| ledger.submit_transaction(tx));
        match submitted {
            Ok(txid) => {
                self.onchain_payment_txids.insert(txid);
                self.onchain_pending.push(OnchainPayment {
                    asset: asset.clone(),
                    txid,
                    issued: self.tick,
                });
            }
            Err(e) => self.note(format!(
                "event=onchain_payment from={from} to={to} amount_msat={amount} result=failed reason=\"{e}\""
            )),
        }
    }

    fn settle_onchain_payments(&mut self, asset: &AssetId) {
        let Some(ledger) = self.network.ledger(asset) else {
            return;
        };
        let tick = self.tick;
        let mut confirmed = 0;
        let mut latency = 0;
        self.onchain_pending.retain(|p| {
            if &p.asset == asset && ledger.confirmation_height(&p.txid).is_some() {
                confirmed += 1;
                latency += tick - p.issued;
                false
            } else {
                true
            }
        });
        self.stats.succeeded += confirmed;
        self.stats.latency_ticks += latency;
    }

    /// Takes the first `⌈fraction × nodes⌉` nodes of a seeded shuffle
    /// offline, so a larger fraction always covers a smaller one. Channels
    /// with an online peer close unilaterally; channels between two offline
    /// nodes are frozen. Both leave the graph.
    pub fn apply_node_failures(&mut self, fraction: f64) -> FailureReport {
        let fraction = fraction.clamp(0.0, 1.0);
        let k = ((fraction * self.nodes.len() as f64) - 1e-9).ceil().max(0.0) as usize;
        let chosen: Vec<NodeId> = self.failure_order[..k.min(self.nodes.len())].to_vec();
        let mut removed = Vec::new();
        let mut offline = Vec::new();
        for node in chosen {
            if !self.network.graph().is_online(&node) {
                continue;
            }
            removed.extend(self.network.node_offline(&node));
            offline.push(node);
        }
        let capacity_removed_msat = removed
            .iter()
            .map(|id| self.network.channel(id).expect("known channel").capacity_msat())
            .sum();
        FailureReport {
            offline,
            removed_channels: removed,
            capacity_removed_msat,
        }
    }

    /// Pure snapshot of the counters.
    pub fn collect_metrics(&self) -> Metrics {
        let mut onchain = 0u64;
        let mut fundings = 0u64;
        let mut base_payments = 0u64;
        for (_, ledger) in self.network.chains().iter() {
            let txids = ledger
                .confirmed()
                .iter()
                .map(|c| c.txid)
                .chain(ledger.mempool().map(|t| t.txid()));
            for txid in txids {
                if self.setup_txids.contains(&txid) {
                    continue;
                }
                onchain += 1;
                if self.funding_txids.contains(&txid) {
                    fundings += 1;
                } else if self.onchain_payment_txids.contains(&txid) {
                    base_payments += 1;
                }
            }
        }
        let settlement = onchain - fundings - base_payments;
        let offchain = self.network.offchain_update_count();
        let inflight = self.network.inflight_payments() as u64 + self.onchain_pending.len() as u64;
        let graph = self.network.graph();
        let mean = |sum: u64| {
            if self.stats.succeeded == 0 {
                0.0
            } else {
                sum as f64 / self.stats.succeeded as f64
            }
        };
        Metrics {
            payments_attempted: self.stats.attempted,
            payments_succeeded: self.stats.succeeded,
            payments_failed: self.stats.attempted - self.stats.succeeded - inflight,
            payments_inflight: inflight,
            mean_hops: mean(self.stats.hops),
            mean_latency_ticks: mean(self.stats.latency_ticks),
            total_fees_msat: self.stats.fees_msat,
            onchain_tx_count: onchain,
            settlement_tx_count: settlement,
            offchain_update_count: offchain,
            netting_ratio: if settlement == 0 {
                0.0
            } else {
                offchain as f64 / settlement as f64
            },
            ln_capacity_msat: graph.total_capacity_msat(),
            reachable_nodes: graph.online_count() as u64,
            active_nodes: self
                .active
                .iter()
                .filter(|n| graph.is_online(n))
                .count() as u64,
            cheat_attempts: self.network.cheat_attempts(),
            cheats_punished: self.network.cheats_punished(),
        }
    }
}
