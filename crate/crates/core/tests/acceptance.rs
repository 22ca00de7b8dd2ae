//! Acceptance suite. Runs every criterion at its stated tolerance and time
//! budget and prints one PASS/FAIL line per criterion.
//!
//! Built with `harness = false`: `cargo test --test acceptance` runs
//! `main` directly and exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use lnsim::basechain::{ChainParams, Ledger, OutPoint, TX_FEE_MSAT};
use lnsim::channel::{node_key, open_channel, AlgorithmStep, Channel, EventKind, OpenParams, Side};
use lnsim::crypto::{PaymentHash, Preimage};
use lnsim::htlc::swap::{explore, interleavings, SwapSession};
use lnsim::htlc::{SwapOutcome, SwapTerms};
use lnsim::routing::{
    build_onion, find_route, peel_onion, FeePolicy, Network, Route, RouteError, RouteHop,
};
use lnsim::simnet::config::EventConfig;
use lnsim::simnet::{build_network, demo_transcript, run_scenario, Metrics, ScenarioConfig, World};
use lnsim::{AssetId, ChannelId, NodeId, MSAT_PER_BTC};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BTC: u64 = MSAT_PER_BTC;

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.scn"));
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn n(s: &str) -> NodeId {
    NodeId::new(s)
}

fn wallet(l: &Ledger, node: &str) -> u64 {
    l.balance_of(&node_key(&n(node)).public_key())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ensure_eq<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    ensure(got == want, || format!("{what}: got {got:?}, want {want:?}"))
}

/// Every ledger and open channel seen by any criterion, for the
/// conservation check.
#[derive(Default)]
struct Audit {
    ledgers: usize,
    channels: usize,
    failures: Vec<String>,
}

impl Audit {
    fn ledger(&mut self, label: &str, l: &Ledger) {
        self.ledgers += 1;
        if let Err(e) = ledger_conserves(l) {
            self.failures.push(format!("{label}/{}: {e}", l.asset_id()));
        }
    }

    fn channel(&mut self, label: &str, c: &Channel) {
        if !c.is_open() {
            return;
        }
        self.channels += 1;
        let [a, b] = c.balances();
        let htlcs: u64 = c.pending_htlcs().iter().map(|h| h.amount_msat).sum();
        if a + b + htlcs != c.capacity_msat() {
            self.failures.push(format!(
                "{label}/{}: {a} + {b} + {htlcs} != {}",
                c.id(),
                c.capacity_msat()
            ));
        }
    }

    fn network(&mut self, label: &str, net: &Network) {
        for (_, l) in net.chains().iter() {
            self.ledger(label, l);
        }
        for c in net.channels() {
            self.channel(label, c);
        }
    }

    fn world(&mut self, label: &str, w: &World) {
        self.network(label, &w.network);
    }
}

/// Rebuilds the ledger's value flow from its transactions: genesis value
/// must equal unspent value plus the fee of every confirmed transaction,
/// where each fee is inputs minus outputs.
fn ledger_conserves(l: &Ledger) -> Result<(), String> {
    let genesis: u64 = l.params().genesis_allocations.values().sum();
    let mut values: BTreeMap<OutPoint, u64> = l
        .params()
        .genesis_allocations
        .values()
        .enumerate()
        .map(|(i, v)| (OutPoint::new(l.genesis_txid(), i as u32), *v))
        .collect();
    let mut fees = 0u64;
    for c in l.confirmed() {
        let mut input = 0u64;
        for i in &c.tx.inputs {
            input += values
                .get(&i.prevout)
                .ok_or_else(|| format!("{} spends an unknown output", c.txid.to_hex()))?;
        }
        let output: u64 = c.tx.outputs.iter().map(|o| o.amount_msat).sum();
        let fee = input
            .checked_sub(output)
            .ok_or_else(|| format!("{} creates value", c.txid.to_hex()))?;
        if fee < TX_FEE_MSAT {
            return Err(format!("{} pays fee {fee}", c.txid.to_hex()));
        }
        fees += fee;
        for (v, o) in c.tx.outputs.iter().enumerate() {
            values.insert(OutPoint::new(c.txid, v as u32), o.amount_msat);
        }
    }
    let unspent: u64 = l.utxos().map(|(_, u)| u.output.amount_msat).sum();
    ensure(unspent + fees == genesis, || {
        format!("unspent {unspent} + fees {fees} != genesis {genesis}")
    })?;
    ensure_eq("fees burned", l.fees_burned(), fees)?;
    ensure_eq("supply", l.supply(), genesis - fees)
}

fn run(cfg: &ScenarioConfig) -> (World, Metrics) {
    let mut w = build_network(cfg).unwrap_or_else(|e| panic!("{}: {e}", cfg.name));
    let m = run_scenario(&mut w, cfg);
    (w, m)
}

// 1 ----------------------------------------------------------------------

fn update_trace(audit: &mut Audit) -> Result<String, String> {
    let params = ChainParams::bitcoin_like("BTC")
        .with_allocation(node_key(&n("alice")).public_key(), 10 * BTC + TX_FEE_MSAT)
        .with_allocation(node_key(&n("bob")).public_key(), 10 * BTC);
    let mut ledger = Ledger::new(params).map_err(|e| e.to_string())?;
    let mut ch = open_channel(&mut ledger, OpenParams::new("alice-bob", "alice", "bob", 10 * BTC, 10 * BTC))
        .map_err(|e| e.to_string())?;
    ledger.mine_block();
    ch.confirm_funding(&ledger).map_err(|e| e.to_string())?;
    ch.update_balance(Side::A, 2 * BTC).map_err(|e| e.to_string())?;
    ensure_eq("balances", ch.balances(), [8 * BTC, 12 * BTC])?;

    let steps: Vec<(AlgorithmStep, u64)> = ch
        .trace()
        .iter()
        .filter_map(|e| match e.event {
            EventKind::Step { step, .. } => Some((step, e.version)),
            _ => None,
        })
        .collect();
    let order: Vec<u8> = steps.iter().map(|(s, _)| s.number()).collect();
    ensure_eq("step order", order, (1..=8).collect())?;
    ensure(
        steps[6].0 == AlgorithmStep::InitiatorRevokes && steps[7].0 == AlgorithmStep::CounterpartyRevokes,
        || "revocations are not the last two steps".into(),
    )?;
    // the old commitments are revoked only after both new ones are signed
    ensure(steps[..6].iter().all(|(_, v)| *v == 1), || "new commitments not version 1".into())?;
    ensure(steps[6..].iter().all(|(_, v)| *v == 0), || "revocations not of version 0".into())?;
    audit.ledger("update_trace", &ledger);
    audit.channel("update_trace", &ch);

    let t = demo_transcript();
    let pos: Vec<usize> = (1..=8)
        .map(|i| t.find(&format!("step {i}:")).ok_or(format!("demo lacks step {i}")))
        .collect::<Result<_, _>>()?;
    ensure(pos.windows(2).all(|w| w[0] < w[1]), || "demo steps out of order".into())?;
    ensure(t.contains("final balances: alice 8 BTC, bob 12 BTC"), || "demo balances".into())?;
    Ok(t)
}

// 2 ----------------------------------------------------------------------

fn netting(audit: &mut Audit) -> Result<String, String> {
    let cfg = scenario("alice_bob");
    let (w, m) = run(&cfg);
    ensure_eq("offchain_update_count", m.offchain_update_count, 1000)?;
    ensure_eq("onchain_tx_count", m.onchain_tx_count, 2)?;
    ensure_eq("netting_ratio", m.netting_ratio, 1000.0)?;
    // independent count: transactions creating or spending the funding output
    let ch = w.network.channel(&ChannelId::new("alice-bob")).ok_or("no channel")?;
    let funding = ch.funding_outpoint();
    let l = w.network.ledger(ch.asset()).ok_or("no ledger")?;
    let touching = l
        .confirmed()
        .iter()
        .filter(|c| c.txid == funding.txid || c.tx.inputs.iter().any(|i| i.prevout == funding))
        .count();
    ensure_eq("transactions touching the channel", touching, 2)?;
    audit.world("netting", &w);
    Ok(m.to_csv())
}

// 3 ----------------------------------------------------------------------

/// FIFO queue with `cap` confirmations per block every `interval` ticks.
/// Returns (block tick, confirmed count) for each non-empty block.
fn queue_oracle(arrivals: &[(u64, u64)], cap: u64, interval: u64, until: u64) -> Vec<(u64, u64)> {
    let mut queued = 0u64;
    let mut out = Vec::new();
    for tick in 0..until {
        queued += arrivals.iter().filter(|(t, _)| *t == tick).map(|(_, c)| c).sum::<u64>();
        if tick > 0 && tick % interval == 0 && queued > 0 {
            let take = queued.min(cap);
            queued -= take;
            out.push((tick, take));
        }
    }
    out
}

/// Runs an on-chain control scenario and checks every block against the
/// queue oracle. Returns the metrics CSV.
fn control_run(cfg: &ScenarioConfig, audit: &mut Audit) -> Result<String, String> {
    let chain = &cfg.chains[0];
    let cap = chain.tps * chain.block_interval_secs;
    let p = &cfg.workload.payments[0];
    let expected = queue_oracle(&[(p.tick, p.count)], cap, chain.block_interval_secs, cfg.duration_ticks);
    ensure(!expected.is_empty(), || "oracle confirms nothing".into())?;

    // just before the first block everything is still queued
    let mut early = cfg.clone();
    early.duration_ticks = chain.block_interval_secs;
    let (w, m) = run(&early);
    let asset = AssetId::new(chain.asset.as_str());
    ensure_eq("queued before first block", w.network.ledger(&asset).ok_or("no ledger")?.mempool_len() as u64, p.count)?;
    ensure_eq("confirmed before first block", m.payments_succeeded, 0)?;

    let mut w = build_network(cfg).map_err(|e| e.to_string())?;
    // blocks mined while building precede tick 0
    let built_at = w.network.ledger(&asset).ok_or("no ledger")?.height();
    let m = run_scenario(&mut w, cfg);
    let l = w.network.ledger(&asset).ok_or("no ledger")?;
    let mut per_block: BTreeMap<u64, u64> = BTreeMap::new();
    for c in l.confirmed().iter().filter(|c| c.height > built_at) {
        *per_block.entry(c.height - built_at).or_default() += 1;
    }
    let got: Vec<(u64, u64)> = per_block
        .into_iter()
        .map(|(h, c)| (h * chain.block_interval_secs, c))
        .collect();
    ensure_eq("confirmations per block", got, expected.clone())?;
    let confirmed: u64 = expected.iter().map(|(_, c)| c).sum();
    ensure_eq("control succeeded", m.payments_succeeded, confirmed)?;
    ensure_eq("control still queued", m.payments_inflight, p.count - confirmed)?;
    let oracle_latency: u64 = expected.iter().map(|(t, c)| (t - p.tick) * c).sum();
    ensure_eq(
        "control mean latency",
        m.mean_latency_ticks,
        oracle_latency as f64 / confirmed as f64,
    )?;
    ensure(m.mean_latency_ticks >= (chain.block_interval_secs - p.tick) as f64, || {
        "control confirmed faster than one block".into()
    })?;
    audit.world(&cfg.name, &w);
    Ok(m.to_csv())
}

fn throughput(audit: &mut Audit) -> Result<String, String> {
    let cfg = scenario("control");
    let p = cfg.workload.payments[0].clone();
    let mut fp = control_run(&cfg, audit)?;
    // at 1 TPS the same load spills into a second block
    let mut slow = cfg.clone();
    slow.name = "control_1tps".into();
    slow.chains[0].tps = 1;
    fp.push_str(&control_run(&slow, audit)?);

    let ln = scenario("ln_control");
    let (lw, lm) = run(&ln);
    ensure_eq("ln succeeded", lm.payments_succeeded, p.count)?;
    ensure_eq("ln mean latency", lm.mean_latency_ticks, 0.0)?;
    let same_tick = lw
        .log()
        .iter()
        .filter(|l| l.starts_with(&format!("tick={} event=payment", p.tick)) && l.contains("result=ok"))
        .count() as u64;
    ensure_eq("ln payments completed in their issue tick", same_tick, p.count)?;
    ensure_eq("ln onchain txs", lm.onchain_tx_count, 1)?;
    audit.world("ln_control", &lw);
    fp.push_str(&lm.to_csv());
    Ok(fp)
}

// 4 ----------------------------------------------------------------------

struct CheatCase {
    net: Network,
    id: ChannelId,
    cheater: NodeId,
    victim: NodeId,
    version: u64,
    delay: u32,
}

fn cheat_case(seed: u64) -> Result<CheatCase, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let asset = AssetId::new("BTC");
    let mut net = Network::new(seed);
    let fund = [rng.gen_range(1..=10) * BTC, rng.gen_range(1..=10) * BTC];
    let params = ChainParams::bitcoin_like("BTC")
        .with_allocation(node_key(&n("alice")).public_key(), fund[0] + TX_FEE_MSAT)
        .with_allocation(node_key(&n("bob")).public_key(), fund[1]);
    net.add_chain(params).map_err(|e| e.to_string())?;
    net.add_node(n("alice"));
    net.add_node(n("bob"));
    let delay = rng.gen_range(1..=12);
    let id = net
        .open_channel(
            &asset,
            OpenParams::new("alice-bob", "alice", "bob", fund[0], fund[1]).with_delay(delay),
            FeePolicy::default(),
        )
        .map_err(|e| e.to_string())?;
    net.mine(&asset);
    let updates = rng.gen_range(1..=15);
    for _ in 0..updates {
        let payer = if rng.gen_bool(0.5) { "alice" } else { "bob" };
        let ch = net.channel(&id).ok_or("no channel")?;
        let bal = ch.balance(ch.side_of(&n(payer)).ok_or("side")?);
        let amount = rng.gen_range(0..=bal / 2);
        net.transfer(&id, &n(payer), amount).map_err(|e| e.to_string())?;
    }
    let version = rng.gen_range(0..updates);
    let (cheater, victim) = if rng.gen_bool(0.5) { ("alice", "bob") } else { ("bob", "alice") };
    Ok(CheatCase {
        net,
        id,
        cheater: n(cheater),
        victim: n(victim),
        version,
        delay,
    })
}

fn cheat_punishment(audit: &mut Audit) -> Result<String, String> {
    let asset = AssetId::new("BTC");
    let mut punished = 0;
    let mut stolen = 0;
    let mut fp = String::new();
    for seed in 0..200u64 {
        // victim online: the watcher sweeps everything
        let mut c = cheat_case(seed)?;
        let cap = c.net.channel(&c.id).ok_or("no channel")?.capacity_msat();
        let before = wallet(c.net.ledger(&asset).ok_or("no ledger")?, c.victim.as_str());
        c.net.broadcast_revoked(&c.id, &c.cheater, c.version).map_err(|e| format!("seed {seed}: {e}"))?;
        for _ in 0..3 {
            c.net.mine(&asset);
        }
        let after = wallet(c.net.ledger(&asset).ok_or("no ledger")?, c.victim.as_str());
        // commitment fee plus penalty fee
        ensure_eq(&format!("seed {seed} victim gain"), after - before, cap - 2 * TX_FEE_MSAT)?;
        ensure_eq(&format!("seed {seed} attempts"), c.net.cheat_attempts(), 1)?;
        ensure_eq(&format!("seed {seed} punished"), c.net.cheats_punished(), 1)?;
        punished += 1;
        audit.network("cheat_online", &c.net);
        fp.push_str(&format!("{seed}:{after};"));

        // victim offline past the delay: the cheater keeps its old balance
        let mut c = cheat_case(seed)?;
        let to_holder = {
            let ch = c.net.channel(&c.id).ok_or("no channel")?;
            let side = ch.side_of(&c.cheater).ok_or("side")?;
            ch.commitment(side, c.version).ok_or("no commitment")?.to_holder_msat
        };
        let before = wallet(c.net.ledger(&asset).ok_or("no ledger")?, c.cheater.as_str());
        c.net.set_reachable(&c.victim, false);
        c.net.broadcast_revoked(&c.id, &c.cheater, c.version).map_err(|e| format!("seed {seed}: {e}"))?;
        for _ in 0..c.delay + 3 {
            c.net.mine(&asset);
        }
        let after = wallet(c.net.ledger(&asset).ok_or("no ledger")?, c.cheater.as_str());
        ensure_eq(&format!("seed {seed} cheater gain"), after - before, to_holder - TX_FEE_MSAT)?;
        ensure_eq(&format!("seed {seed} offline attempts"), c.net.cheat_attempts(), 1)?;
        ensure_eq(&format!("seed {seed} offline punished"), c.net.cheats_punished(), 0)?;
        ensure_eq(&format!("seed {seed} succeeded"), c.net.cheats_succeeded(), 1)?;
        stolen += 1;
        audit.network("cheat_offline", &c.net);
        fp.push_str(&format!("{after};"));
    }
    ensure_eq("punished", punished, 200)?;
    ensure_eq("stolen", stolen, 200)?;

    let (w, m) = run(&scenario("punish"));
    ensure_eq("punish scenario attempts", m.cheat_attempts, 1)?;
    ensure_eq("punish scenario punished", m.cheats_punished, 1)?;
    audit.world("punish", &w);
    fp.push_str(&m.to_csv());
    Ok(fp)
}

// 5 ----------------------------------------------------------------------

fn swap_atomicity(audit: &mut Audit) -> Result<String, String> {
    let mut lx = Ledger::new(
        ChainParams::bitcoin_like("BTC")
            .with_allocation(node_key(&n("alice")).public_key(), 50 * BTC)
            .with_allocation(node_key(&n("bob")).public_key(), 50 * BTC),
    )
    .map_err(|e| e.to_string())?;
    let mut ly = Ledger::new(
        ChainParams::bitcoin_like("SEC")
            .with_allocation(node_key(&n("alice")).public_key(), 50 * BTC)
            .with_allocation(node_key(&n("bob")).public_key(), 50 * BTC),
    )
    .map_err(|e| e.to_string())?;
    let mut cx = open_channel(&mut lx, OpenParams::new("x", "alice", "bob", 10 * BTC, 10 * BTC)).map_err(|e| e.to_string())?;
    let mut cy = open_channel(&mut ly, OpenParams::new("y", "bob", "alice", 10 * BTC, 10 * BTC)).map_err(|e| e.to_string())?;
    lx.mine_block();
    ly.mine_block();
    cx.confirm_funding(&lx).map_err(|e| e.to_string())?;
    cy.confirm_funding(&ly).map_err(|e| e.to_string())?;
    audit.ledger("swap", &lx);
    audit.ledger("swap", &ly);

    let terms = SwapTerms {
        amount_x_msat: BTC,
        amount_y_msat: 3 * BTC,
        delta_blocks: 2,
        expiry_y_blocks: 3,
        expiry_x_blocks: 5,
    };
    let session =
        SwapSession::open((cx, lx), (cy, ly), &n("alice"), &terms, Preimage([42; 32])).map_err(|e| e.to_string())?;
    // 3 distinct events plus up to 7 block ticks: at most 10 events
    let max_ticks = 7;
    let seqs = interleavings(max_ticks);
    ensure(seqs.iter().all(|s| s.len() <= 10), || "sequence longer than 10 events".into())?;
    let tally = explore(&session, max_ticks);
    let total: usize = tally.values().sum();
    ensure_eq("sequences explored", total, seqs.len())?;
    let bad: Vec<&SwapOutcome> = tally.keys().filter(|o| !o.is_atomic()).collect();
    ensure(bad.is_empty(), || format!("non-atomic outcomes {bad:?}"))?;
    ensure(
        tally.contains_key(&SwapOutcome::BothSettled) && tally.contains_key(&SwapOutcome::BothRefunded),
        || format!("outcomes {tally:?}"),
    )?;

    let (w, m) = run(&scenario("swap"));
    ensure(w.log().iter().any(|l| l.contains("event=swap") && l.contains("BothSettled")), || {
        "swap scenario did not settle".into()
    })?;
    audit.world("swap", &w);
    Ok(format!("{tally:?}\n{}", m.to_csv()))
}

// 6 ----------------------------------------------------------------------

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

fn onion_privacy(_: &mut Audit) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    let mut fp = String::new();
    for r in 0..100 {
        let len = rng.gen_range(1..=6);
        let names: Vec<NodeId> = (0..=len).map(|_| n(&format!("node-{:06}", rng.gen_range(0..1_000_000)))).collect();
        let hops: Vec<RouteHop> = (1..=len)
            .map(|i| RouteHop {
                node_id: names[i].clone(),
                channel_id: ChannelId::new(format!("ch-{:06}", rng.gen_range(0..1_000_000))),
                amount_to_forward_msat: 1_000 + (len - i) as u64,
                expiry_height: 100 + 6 * (len - i) as u64,
            })
            .collect();
        let route = Route {
            source: names[0].clone(),
            destination: names[len].clone(),
            hops,
        };
        let mut hash = [0u8; 32];
        rng.fill(&mut hash);
        let mut packet = build_onion(&route, PaymentHash(hash), &mut rng).map_err(|e| e.to_string())?;
        let dest = route.destination.as_bytes();
        for i in 0..len {
            let peeled = peel_onion(&packet, &route.hops[i].node_id).map_err(|e| format!("route {r} hop {i}: {e}"))?;
            if i + 1 < len && route.hops[i].node_id != route.destination {
                ensure(!contains(&peeled.to_bytes(), dest), || {
                    format!("route {r}: hop {i} sees the destination")
                })?;
                checked += 1;
            }
            match peeled.next {
                Some(p) => packet = p,
                None => ensure(i + 1 == len, || format!("route {r} ended early"))?,
            }
        }
        fp.push_str(&format!("{:02x?};", &packet.mac[..4]));
    }
    ensure(checked > 0, || "no intermediate hops checked".into())?;
    Ok(fp)
}

// 7, 8 --------------------------------------------------------------------

fn channel_total(w: &World, node: &str) -> u64 {
    w.network
        .channels_of(&n(node))
        .map(|c| c.balance(c.side_of(&n(node)).expect("own channel")))
        .sum()
}

fn multi_hop(audit: &mut Audit) -> Result<String, String> {
    let mut cfg = scenario("trudy");
    cfg.workload.payments.truncate(1);
    let amount = cfg.workload.payments[0].amount_msat;
    let mut w = build_network(&cfg).map_err(|e| e.to_string())?;
    let direct = w.network.graph().edges().any(|e| {
        let [a, b] = &e.nodes;
        (a.as_str(), b.as_str()) == ("alice", "trudy") || (a.as_str(), b.as_str()) == ("trudy", "alice")
    });
    ensure(!direct, || "alice and trudy share a channel".into())?;
    let before: Vec<u64> = ["alice", "bob", "trudy"].iter().map(|x| channel_total(&w, x)).collect();
    let m = run_scenario(&mut w, &cfg);
    ensure_eq("succeeded", m.payments_succeeded, 1)?;
    ensure_eq("hops", m.mean_hops, 2.0)?;
    let fee = cfg.fees.base_msat + amount * cfg.fees.ppm / 1_000_000;
    let after: Vec<u64> = ["alice", "bob", "trudy"].iter().map(|x| channel_total(&w, x)).collect();
    ensure_eq("bob gain", after[1] - before[1], fee)?;
    ensure_eq("trudy gain", after[2] - before[2], amount)?;
    ensure_eq("alice loss", before[0] - after[0], amount + fee)?;
    ensure_eq("fees metric", m.total_fees_msat, fee)?;
    audit.world("trudy", &w);
    Ok(m.to_csv())
}

fn micropayment(audit: &mut Audit) -> Result<String, String> {
    let cfg = scenario("trudy");
    ensure_eq("last payment amount", cfg.workload.payments[1].amount_msat, 1)?;
    let mut w = build_network(&cfg).map_err(|e| e.to_string())?;
    let trudy = channel_total(&w, "trudy");
    let m = run_scenario(&mut w, &cfg);
    ensure_eq("succeeded", m.payments_succeeded, 2)?;
    ensure_eq("trudy gain", channel_total(&w, "trudy") - trudy, cfg.workload.payments[0].amount_msat + 1)?;
    ensure(w.log().iter().any(|l| l.contains("amount_msat=1 result=ok")), || "no 1 msat success logged".into())?;

    // and on a single channel
    let mut one = cfg.clone();
    one.workload.payments = vec![lnsim::simnet::config::PaymentConfig {
        tick: 1,
        from: "alice".into(),
        to: "bob".into(),
        amount_msat: 1,
        count: 1,
        asset: None,
        drop_after_lock: None,
    }];
    let (w1, m1) = run(&one);
    ensure_eq("direct 1 msat", m1.payments_succeeded, 1)?;
    let ch = w1.network.channel(&ChannelId::new("alice-bob")).ok_or("no channel")?;
    ensure_eq("direct balances", ch.balances(), [500 * BTC / 100 - 1, 500 * BTC / 100 + 1])?;
    audit.world("micropayment", &w);
    audit.world("micropayment_direct", &w1);
    Ok(format!("{}{}", m.to_csv(), m1.to_csv()))
}

// 9 ----------------------------------------------------------------------

fn check_route(w: &World, r: &Route, amount: u64) -> Result<(), String> {
    let g = w.network.graph();
    let mut prev = r.source.clone();
    for (j, h) in r.hops.iter().enumerate() {
        let e = g.edge(&h.channel_id).ok_or("route uses a missing edge")?;
        ensure(e.nodes.contains(&prev) && e.nodes.contains(&h.node_id), || "hop endpoints".into())?;
        ensure(e.capacity_msat >= h.amount_to_forward_msat, || "over capacity".into())?;
        if let Some(next) = r.hops.get(j + 1) {
            let next_edge = g.edge(&next.channel_id).ok_or("missing edge")?;
            ensure_eq(
                "forwarded amount",
                h.amount_to_forward_msat,
                next.amount_to_forward_msat + next_edge.policy.fee(next.amount_to_forward_msat),
            )?;
        }
        prev = h.node_id.clone();
    }
    ensure(prev == r.destination, || "route ends elsewhere".into())?;
    ensure_eq("delivered", r.hops.last().ok_or("empty route")?.amount_to_forward_msat, amount)
}

fn snapshot_scale(audit: &mut Audit) -> Result<String, String> {
    let cfg = scenario("snapshot");
    let w = build_network(&cfg).map_err(|e| e.to_string())?;
    let g = w.network.graph();
    ensure_eq("nodes", g.node_count(), 5788)?;
    ensure_eq("channels", g.edge_count(), 23021)?;
    let sum: u64 = g.edges().map(|e| e.capacity_msat).sum();
    ensure_eq("capacity (edge sum)", sum, 61_851_000_000_000)?;
    let m = w.collect_metrics();
    ensure_eq("ln_capacity_msat", m.ln_capacity_msat, 61_851_000_000_000)?;
    ensure(m.to_csv().contains(",618.51000000000,"), || "BTC column".into())?;
    ensure_eq("active nodes", m.active_nodes, 2870)?;
    ensure_eq("reachable nodes", m.reachable_nodes, 5788)?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let asset = AssetId::new("BTC");
    let params = w.network.route_params.clone();
    let nodes = w.nodes();
    let mut found = 0;
    let mut fp = String::new();
    for _ in 0..1000 {
        let a = &nodes[rng.gen_range(0..nodes.len())];
        let mut b = a;
        while b == a {
            b = &nodes[rng.gen_range(0..nodes.len())];
        }
        let amount = rng.gen_range(1_000..=100_000_000);
        match find_route(g, a, b, amount, &asset, &params) {
            Ok(r) => {
                check_route(&w, &r, amount)?;
                found += 1;
                fp.push_str(&format!("{};", r.total_amount_msat()));
            }
            Err(RouteError::NoRoute) => fp.push_str("-;"),
            Err(e) => return Err(format!("query {a} -> {b}: {e}")),
        }
    }
    ensure(found > 900, || format!("only {found} of 1000 queries routed"))?;
    audit.world("snapshot", &w);
    Ok(format!("{}found={found}\n{fp}", m.to_csv()))
}

// 10 ---------------------------------------------------------------------

fn ddos(audit: &mut Audit) -> Result<String, String> {
    let base = scenario("ddos");
    let mut w = build_network(&base).map_err(|e| e.to_string())?;
    let before: BTreeMap<ChannelId, (NodeId, NodeId, u64)> = w
        .network
        .graph()
        .edges()
        .map(|e| (e.channel_id.clone(), (e.nodes[0].clone(), e.nodes[1].clone(), e.capacity_msat)))
        .collect();
    let cap_before = w.network.graph().total_capacity_msat();
    let report = w.apply_node_failures(0.2);
    ensure_eq("offline nodes", report.offline.len(), (0.2f64 * 5788.0).ceil() as usize)?;
    let offline: BTreeSet<&NodeId> = report.offline.iter().collect();
    let touching: BTreeSet<ChannelId> = before
        .iter()
        .filter(|(_, (a, b, _))| offline.contains(a) || offline.contains(b))
        .map(|(id, _)| id.clone())
        .collect();
    let removed: BTreeSet<ChannelId> = report.removed_channels.iter().cloned().collect();
    ensure_eq("removed channels", removed.len(), touching.len())?;
    ensure(removed == touching, || "removed set differs from channels touching offline nodes".into())?;
    for id in &touching {
        let ch = w.network.channel(id).ok_or("no channel")?;
        ensure(!ch.is_open(), || format!("{id} still open"))?;
        ensure(w.network.graph().edge(id).is_none_or(|e| !e.is_active()), || format!("{id} still routable"))?;
    }
    let oracle: u64 = touching.iter().map(|id| before[id].2).sum();
    ensure_eq("capacity removed", report.capacity_removed_msat, oracle)?;
    ensure_eq("capacity after", w.network.graph().total_capacity_msat(), cap_before - oracle)?;
    audit.world("ddos_failures", &w);

    let mut rates = Vec::new();
    let mut fp = String::new();
    for f in [0.0, 0.1, 0.2, 0.4] {
        let mut cfg = base.clone();
        for e in &mut cfg.events {
            if let EventConfig::OfflineFraction { fraction, .. } = e {
                *fraction = f;
            }
        }
        let (w, m) = run(&cfg);
        audit.world(&format!("ddos_{f}"), &w);
        rates.push((f, m.success_rate()));
        fp.push_str(&m.to_csv());
    }
    ensure(rates.windows(2).all(|p| p[1].1 <= p[0].1), || format!("success rates {rates:?}"))?;
    println!(
        "    success rate by offline fraction: {}",
        rates.iter().map(|(f, r)| format!("{f}={r:.3}")).collect::<Vec<_>>().join(" ")
    );
    Ok(fp)
}

// ------------------------------------------------------------------------

type Criterion = fn(&mut Audit) -> Result<String, String>;

fn attempt(f: Criterion, audit: &mut Audit) -> (Result<String, String>, Duration) {
    let start = Instant::now();
    let r = panic::catch_unwind(AssertUnwindSafe(|| f(audit))).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    (r, start.elapsed())
}

fn report(no: usize, name: &str, ok: Result<(), String>, took: Option<Duration>, limit: Option<Duration>) -> bool {
    let timing = match (took, limit) {
        (Some(t), Some(l)) => format!(" [{:.2}s / {}s]", t.as_secs_f64(), l.as_secs()),
        (Some(t), None) => format!(" [{:.2}s]", t.as_secs_f64()),
        _ => String::new(),
    };
    match ok {
        Ok(()) => {
            println!("criterion {no:>2} {name:<26} PASS{timing}");
            true
        }
        Err(e) => {
            println!("criterion {no:>2} {name:<26} FAIL{timing}: {e}");
            false
        }
    }
}

fn main() {
    let criteria: [(&str, Criterion, u64); 10] = [
        ("update trace 10/10 -> 8/12", update_trace, 1),
        ("netting 1000 updates", netting, 5),
        ("throughput contrast", throughput, 10),
        ("cheat punishment", cheat_punishment, 30),
        ("swap atomicity", swap_atomicity, 60),
        ("onion privacy", onion_privacy, 10),
        ("multi-hop payment", multi_hop, 1),
        ("micropayment floor", micropayment, 1),
        ("snapshot scale", snapshot_scale, 120),
        ("ddos degradation", ddos, 180),
    ];
    let mut audit = Audit::default();
    let mut all = true;
    let mut prints = Vec::new();
    for (i, (name, f, secs)) in criteria.iter().enumerate() {
        let limit = Duration::from_secs(*secs);
        let (r, took) = attempt(*f, &mut audit);
        let ok = match &r {
            Ok(_) if took > limit => Err(format!("took {:.2}s", took.as_secs_f64())),
            Ok(_) => Ok(()),
            Err(e) => Err(e.clone()),
        };
        all &= report(i + 1, name, ok, Some(took), Some(limit));
        prints.push(r.ok());
    }

    let conservation = if audit.failures.is_empty() {
        println!(
            "    audited {} ledgers and {} open channels",
            audit.ledgers, audit.channels
        );
        Ok(())
    } else {
        Err(audit.failures.join("; "))
    };
    all &= report(11, "conservation", conservation, None, None);

    let start = Instant::now();
    let mut scratch = Audit::default();
    let mut diffs = Vec::new();
    for (i, (_, f, _)) in criteria.iter().enumerate() {
        let (r, _) = attempt(*f, &mut scratch);
        if r.ok() != prints[i] || prints[i].is_none() {
            diffs.push(i + 1);
        }
    }
    let determinism = if diffs.is_empty() {
        Ok(())
    } else {
        Err(format!("criteria {diffs:?} differ or failed on rerun"))
    };
    all &= report(12, "determinism", determinism, Some(start.elapsed()), None);

    if !all {
        std::process::exit(1);
    }
}
