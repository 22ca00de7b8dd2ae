use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.scn"))
}

fn lnsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lnsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    row[i].to_string()
}

fn temp_scenario(name: &str, body: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("lnsim-cli-{}-{name}.scn", std::process::id()));
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn run_alice_bob_nets_to_two_onchain_txs() {
    let o = lnsim(&["run", scenario("alice_bob").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(column(&csv, "onchain_tx_count"), "2");
    assert_eq!(column(&csv, "offchain_update_count"), "1000");
    assert_eq!(column(&csv, "netting_ratio"), "1000.000000");
}

#[test]
fn same_seed_gives_identical_bytes() {
    let path = scenario("trudy");
    let a = lnsim(&["run", path.to_str().unwrap(), "--seed", "7"]);
    let b = lnsim(&["run", path.to_str().unwrap(), "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn lines_format_and_out_file() {
    let out = std::env::temp_dir().join(format!("lnsim-cli-{}-out.txt", std::process::id()));
    let o = lnsim(&[
        "run",
        scenario("trudy").to_str().unwrap(),
        "--format",
        "lines",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("payments_succeeded=2\n"));
    assert!(text.contains("total_fees_msat=102000\n"));
    std::fs::remove_file(out).ok();
}

#[test]
fn missing_scenario_exits_2() {
    let o = lnsim(&["run", "/nonexistent/none.scn"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario not found"));
}

#[test]
fn invalid_config_names_the_field() {
    let p = temp_scenario(
        "lonely",
        "duration_ticks = 1\n[nodes]\ncount = 1\n[topology]\nkind = \"random\"\nedge_count = 0\n",
    );
    let o = lnsim(&["run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid nodes"), "{}", stderr(&o));
    std::fs::remove_file(p).ok();
}

#[test]
fn unknown_flags_are_rejected() {
    let o = lnsim(&["run", scenario("trudy").to_str().unwrap(), "--speed", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = lnsim(&["fly"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn demo_prints_the_eight_steps_then_the_close() {
    let a = lnsim(&["demo"]);
    assert!(a.status.success());
    let t = stdout(&a);
    let step7 = t.find("step 7:").unwrap();
    assert!(t[step7..].lines().next().unwrap().contains("revocation"));
    assert!(step7 < t.find("step 8:").unwrap());
    assert!(t.find("step 8:").unwrap() < t.find("cooperative close").unwrap());
    assert!(t.contains("final balances: alice 8 BTC, bob 12 BTC"));
    assert_eq!(a.stdout, lnsim(&["demo"]).stdout);
}

#[test]
fn stats_on_the_snapshot() {
    let o = lnsim(&["stats", scenario("snapshot").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("5788 nodes, 23021 channels"));
    assert_eq!(lines.next(), Some("capacity 61851000000000 msat (618.51000000000 BTC)"));
    assert_eq!(lines.next(), Some("active nodes 2870"));
    assert_eq!(lines.next(), Some("channel_id,node_a,node_b,asset,capacity_msat,base_fee_msat,ppm"));
    assert_eq!(lines.count(), 23021);
}

#[test]
fn trace_of_an_idle_channel_is_just_the_funding() {
    let p = temp_scenario(
        "idle",
        r#"
duration_ticks = 5
[nodes]
names = ["alice", "bob"]
[topology]
kind = "explicit"
edges = [{ id = "idle", a = "alice", b = "bob", capacity_msat = 2000 }]
"#,
    );
    let o = lnsim(&["trace", p.to_str().unwrap(), "idle"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("event=funding"));
    std::fs::remove_file(p).ok();
}

#[test]
fn trace_after_punish_ends_punished() {
    let o = lnsim(&["trace", scenario("punish").to_str().unwrap(), "alice-bob"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().last().unwrap().contains("event=punished:B"), "{text}");
}

#[test]
fn trace_of_unknown_channel_exits_2() {
    let o = lnsim(&["trace", scenario("trudy").to_str().unwrap(), "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown channel"));
}
