use std::fmt::Write;

use crate::basechain::{ChainParams, Ledger};
use crate::channel::{node_key, open_channel, AlgorithmStep, OpenParams, Side};
use crate::{format_btc, NodeId, MSAT_PER_BTC};

fn describe(step: AlgorithmStep, payer: &str, payee: &str, old: u64, new: u64) -> String {
    let (p, q) = (
        payer.chars().next().unwrap().to_ascii_uppercase(),
        payee.chars().next().unwrap().to_ascii_uppercase(),
    );
    match step {
        AlgorithmStep::BuildCounterpartyCommitment => {
            format!("{payer} builds {payee}'s new commitment {q}{new}")
        }
        AlgorithmStep::SignCounterpartyCommitment => format!("{payer} signs {q}{new} and sends it to {payee}"),
        AlgorithmStep::CounterpartyCountersigns => format!("{payee} countersigns {q}{new} and keeps it"),
        AlgorithmStep::BuildInitiatorCommitment => format!("{payer}'s new commitment {p}{new} is built"),
        AlgorithmStep::SignInitiatorCommitment => format!("{payee} signs {p}{new} and sends it to {payer}"),
        AlgorithmStep::InitiatorCountersigns => format!("{payer} countersigns {p}{new} and keeps it"),
        AlgorithmStep::InitiatorRevokes => {
            format!("{payer} shares revocation secret R{p}{old}, invalidating {p}{old}")
        }
        AlgorithmStep::CounterpartyRevokes => {
            format!("{payee} shares revocation secret R{q}{old}, invalidating {q}{old}")
        }
    }
}

/// The 10/10 BTC channel between alice and bob, one 2 BTC payment from
/// alice driven step by step, then a cooperative close. Returns the
/// printed transcript.
pub fn demo_transcript() -> String {
    let btc = MSAT_PER_BTC;
    let alice = NodeId::new("alice");
    let bob = NodeId::new("bob");
    let params = ChainParams::bitcoin_like("BTC")
        .with_allocation(node_key(&alice).public_key(), 10 * btc + 1_000)
        .with_allocation(node_key(&bob).public_key(), 10 * btc);
    let mut ledger = Ledger::new(params).expect("valid genesis");
    let mut out = String::new();
    let w = &mut out;

    let mut ch = open_channel(
        &mut ledger,
        OpenParams::new("alice-bob", alice.clone(), bob.clone(), 10 * btc, 10 * btc),
    )
    .expect("funded wallets");
    ledger.mine_block();
    ch.confirm_funding(&ledger).expect("funding confirmed");
    let [a, b] = ch.balances();
    let _ = writeln!(w, "open channel alice-bob: alice {} BTC, bob {} BTC", format_btc(a), format_btc(b));
    let _ = writeln!(w, "holding commitments A1 and B1");
    let _ = writeln!(w, "payment: alice pays bob 2 BTC");

    ch.begin_transfer(Side::A, 2 * btc).expect("sufficient balance");
    for _ in 0..8 {
        let step = ch.step_update().expect("both parties online");
        let _ = writeln!(
            w,
            "step {}: {} ({})",
            step.number(),
            describe(step, "alice", "bob", 1, 2),
            step.slug()
        );
    }
    let [a, b] = ch.balances();
    let _ = writeln!(
        w,
        "updated: version {}, alice {} BTC, bob {} BTC",
        ch.version(),
        format_btc(a),
        format_btc(b)
    );

    let txid = ch.cooperative_close(&mut ledger).expect("open channel");
    ledger.mine_block();
    let tx = &ledger.confirmed_tx(&txid).expect("mined").tx;
    let _ = writeln!(w, "cooperative close {} confirmed at height {}", txid.to_hex(), ledger.height());
    for (name, o) in ["alice", "bob"].iter().zip(&tx.outputs) {
        let _ = writeln!(w, "settled {name}: {} msat ({} BTC)", o.amount_msat, format_btc(o.amount_msat));
    }
    let _ = writeln!(w, "final balances: alice {} BTC, bob {} BTC", a / btc, b / btc);
    out
}
