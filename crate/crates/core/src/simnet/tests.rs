use super::*;
use crate::{ChannelId, NodeId};

const ALICE_BOB: &str = r#"
seed = 7
duration_ticks = 1200

[nodes]
names = ["alice", "bob"]

[topology]
kind = "explicit"
edges = [{ id = "ab", a = "alice", b = "bob", fund_a_msat = 1_000_000_000_000, fund_b_msat = 1_000_000_000_000 }]
"#;

fn alice_bob(extra: &str) -> ScenarioConfig {
    ScenarioConfig::parse(&format!("{ALICE_BOB}\n{extra}")).unwrap()
}

#[test]
fn single_node_is_rejected() {
    let err = ScenarioConfig::parse(
        r#"
duration_ticks = 10
[nodes]
count = 1
[topology]
kind = "random"
edge_count = 0
"#,
    )
    .unwrap_err();
    assert!(matches!(err, ConfigError::Invalid { .. }), "{err:?}");
}

#[test]
fn missing_file_is_not_found() {
    let err = ScenarioConfig::load("/nonexistent/x.scn").unwrap_err();
    assert!(err.to_string().starts_with("scenario not found"));
}

#[test]
fn built_world_has_confirmed_channel_and_no_counted_txs() {
    let cfg = alice_bob("");
    let world = build_network(&cfg).unwrap();
    let ch = world.network.channel(&ChannelId::new("ab")).unwrap();
    assert!(ch.is_open());
    assert_eq!(world.network.graph().edge_count(), 1);
    let m = world.collect_metrics();
    assert_eq!(m.onchain_tx_count, 1);
    assert_eq!(m.settlement_tx_count, 0);
    assert_eq!(m.ln_capacity_msat, 2_000_000_000_000);
    assert_eq!(m.reachable_nodes, 2);
}

#[test]
fn thousand_transfers_net_into_one_close() {
    let cfg = alice_bob(
        r#"
[[workload.transfers]]
tick = 1
channel = "ab"
from = "alice"
amount_msat = 1000
count = 500

[[workload.transfers]]
tick = 2
channel = "ab"
from = "bob"
amount_msat = 1000
count = 500

[[workload.closes]]
tick = 3
channel = "ab"
"#,
    );
    let mut world = build_network(&cfg).unwrap();
    let m = run_scenario(&mut world, &cfg);
    assert_eq!(m.offchain_update_count, 1000);
    assert_eq!(m.onchain_tx_count, 2);
    assert_eq!(m.settlement_tx_count, 1);
    assert_eq!(m.netting_ratio, 1000.0);
    assert_eq!(m.ln_capacity_msat, 0);
}

#[test]
fn empty_workload_changes_nothing() {
    let cfg = alice_bob("");
    let mut world = build_network(&cfg).unwrap();
    let before = world.collect_metrics();
    let after = run_scenario(&mut world, &cfg);
    assert_eq!(after.payments_attempted, 0);
    assert_eq!(after.offchain_update_count, 0);
    assert_eq!(after.onchain_tx_count, before.onchain_tx_count);
    assert_eq!(after.ln_capacity_msat, before.ln_capacity_msat);
    assert_eq!(world.collect_metrics(), after);
}

#[test]
fn node_failures_use_nested_prefixes() {
    let cfg = ScenarioConfig::parse(
        r#"
seed = 3
duration_ticks = 1
[nodes]
count = 1000
[topology]
kind = "random"
edge_count = 1500
"#,
    )
    .unwrap();
    let world = build_network(&cfg).unwrap();
    let mut small = world.clone();
    let mut large = world.clone();
    let a = small.apply_node_failures(0.1);
    let b = large.apply_node_failures(0.2);
    assert_eq!(a.offline.len(), 100);
    assert_eq!(b.offline.len(), 200);
    assert!(a.offline.iter().all(|n| b.offline.contains(n)));
    assert_eq!(large.collect_metrics().reachable_nodes, 800);
    let total = world.network.graph().total_capacity_msat();
    assert_eq!(
        large.network.graph().total_capacity_msat(),
        total - b.capacity_removed_msat
    );
    for id in &b.removed_channels {
        let ch = world.network.channel(id).unwrap();
        let [x, y] = ch.nodes();
        assert!(b.offline.contains(x) || b.offline.contains(y));
    }
}

#[test]
fn liveness_timeout_closes_after_delay() {
    let cfg = alice_bob(
        r#"
[channel]
liveness_timeout_ticks = 30

[[events]]
kind = "node_offline"
tick = 5
nodes = ["bob"]
"#,
    );
    let mut world = build_network(&cfg).unwrap();
    let m = run_scenario(&mut world, &cfg);
    assert_eq!(m.reachable_nodes, 1);
    assert_eq!(m.ln_capacity_msat, 0);
    let ch = world.network.channel(&ChannelId::new("ab")).unwrap();
    assert!(!ch.is_open());
    assert!(world.log().iter().any(|l| l.starts_with("tick=35 event=liveness_timeout node=bob")));
}

#[test]
fn node_back_before_timeout_keeps_channel() {
    let cfg = alice_bob(
        r#"
[channel]
liveness_timeout_ticks = 30

[[events]]
kind = "node_offline"
tick = 5
nodes = ["bob"]

[[events]]
kind = "node_online"
tick = 20
nodes = ["bob"]
"#,
    );
    let mut world = build_network(&cfg).unwrap();
    let m = run_scenario(&mut world, &cfg);
    assert_eq!(m.reachable_nodes, 2);
    assert_eq!(m.ln_capacity_msat, 2_000_000_000_000);
    assert!(world.network.channel(&ChannelId::new("ab")).unwrap().is_open());
}

#[test]
fn onchain_payments_confirm_at_block_boundaries() {
    let cfg = alice_bob(
        r#"
[workload]
onchain = true

[[workload.payments]]
tick = 10
from = "alice"
to = "bob"
amount_msat = 5_000_000
count = 3
"#,
    );
    let mut world = build_network(&cfg).unwrap();
    let m = run_scenario(&mut world, &cfg);
    assert_eq!(m.payments_attempted, 3);
    assert_eq!(m.payments_succeeded, 3);
    assert_eq!(m.mean_latency_ticks, 590.0);
    assert_eq!(m.onchain_tx_count, 4);
    assert_eq!(m.settlement_tx_count, 0);
    let bob = crate::channel::node_key(&NodeId::new("bob")).public_key();
    let l = world.network.ledger(&crate::AssetId::new("BTC")).unwrap();
    assert_eq!(l.balance_of(&bob), 15_000_000);
}

#[test]
fn runs_are_deterministic() {
    let cfg = ScenarioConfig::parse(
        r#"
seed = 11
duration_ticks = 20
[nodes]
count = 60
[topology]
kind = "random"
edge_count = 150
[workload.random]
start_tick = 1
ticks = 10
payments_per_tick = 5
min_amount_msat = 1000
max_amount_msat = 100000000
"#,
    )
    .unwrap();
    let run = || {
        let mut w = build_network(&cfg).unwrap();
        let m = run_scenario(&mut w, &cfg);
        (m.to_csv(), w.log().to_vec())
    };
    let (a, la) = run();
    let (b, lb) = run();
    assert_eq!(a, b);
    assert_eq!(la, lb);
    let mut other = cfg.clone();
    other.seed = 12;
    let mut w = build_network(&other).unwrap();
    assert_ne!(run_scenario(&mut w, &other).to_csv(), a);
}
