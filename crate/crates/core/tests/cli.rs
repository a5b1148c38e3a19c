use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SNAPSHOT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/small_snapshot.json");

fn jamkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jamkit")).args(args).output().expect("binary runs")
}

fn body(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

fn header_row(out: &Output) -> String {
    body(out).lines().next().unwrap_or_default().to_string()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn every_subcommand_is_listed() {
    let out = jamkit(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let help = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "ingest", "stats", "tag", "attack-network", "attack-connectivity", "attack-node",
        "isolation-curves", "cost", "simulate", "verify-plan",
    ] {
        assert!(help.contains(sub), "missing {sub}");
    }
}

#[test]
fn outputs_carry_metadata_and_stable_bodies() {
    let args = ["attack-network", "--snapshot", SNAPSHOT, "--budget", "12", "--tau-min", "432"];
    let a = jamkit(&args);
    let b = jamkit(&args);
    assert_eq!(a.status.code(), Some(0));
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.starts_with("# jamkit "));
    assert!(text.contains("# config: "));
    assert_eq!(body(&a), body(&b));
    assert_eq!(
        header_row(&a),
        "route_index,weight,n_channels,timeout_sum,lock_duration,cumulative_capacity_fraction,cumulative_attacker_channels"
    );
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(!rows.is_empty() && rows.len() <= 6);
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    assert_eq!(last[6].parse::<usize>().unwrap(), 2 * rows.len());
}

#[test]
fn plan_cost_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let plan = tmp(&dir, "plan.json");
    let csv = tmp(&dir, "routes.csv");
    let out = jamkit(&["attack-network", "--snapshot", SNAPSHOT, "--budget", "8", "--plan-out", s(&plan), "--out", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&csv).unwrap().contains("route_index"));

    let cost_json = tmp(&dir, "cost.json");
    let out = jamkit(&["cost", "--plan", s(&plan), "--usd-per-open", "2.2", "--out", s(&cost_json)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cost_json).unwrap()).unwrap();
    let channels = v["attacker_channels"].as_u64().unwrap();
    assert_eq!(channels, 8);
    assert!((v["onchain_fees_usd"].as_f64().unwrap() - 2.2 * 8.0).abs() < 1e-9);
    assert!(v["metadata"].is_array());

    let out = jamkit(&["verify-plan", "--snapshot", SNAPSHOT, "--plan", s(&plan)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let b = body(&out);
    assert_eq!(b.lines().next(), Some("channel_id,pending,slot_limit,probe_error"));
    assert!(b.lines().skip(1).all(|l| l.ends_with(",SlotFull")));
}

#[test]
fn isolation_plan_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let tags = jamkit(&["tag", "--snapshot", SNAPSHOT]);
    let victim = body(&tags).lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    let plan = tmp(&dir, "iso.json");
    let out = jamkit(&["attack-node", "--snapshot", SNAPSHOT, "--victim", &victim, "--plan-out", s(&plan)]);
    assert_eq!(out.status.code(), Some(0));
    let out = jamkit(&["verify-plan", "--snapshot", SNAPSHOT, "--plan", s(&plan)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn tables_have_documented_columns() {
    let cases: [(&[&str], &str); 6] = [
        (&["stats", "--snapshot", SNAPSHOT, "--param", "cltv_delta"], "snapshot,parameter,value,count,share"),
        (&["tag", "--snapshot", SNAPSHOT], "node_id,label,score_lnd,score_clightning,score_eclair"),
        (
            &["attack-connectivity", "--snapshot", SNAPSHOT, "--method", "spectral", "--budget", "6"],
            "attacker_channels,connected_pairs_fraction",
        ),
        (
            &["attack-node", "--snapshot", SNAPSHOT, "--all"],
            "node_id,degree,attacker_channels_needed,exit_channels_needed,unparalyzable",
        ),
        (
            &["isolation-curves", "--impl", "eclair", "--max-degree", "5"],
            "implementation,degree,attacker_channels_needed,exit_channels_needed",
        ),
        (
            &["attack-network", "--snapshot", SNAPSHOT, "--sweep-max-hops", "3,6,10,20", "--budget", "20"],
            "parameter,tau_min,max_route_channels,attacker_channels,capacity_fraction",
        ),
    ];
    for (args, header) in cases {
        let out = jamkit(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(header_row(&out), header, "{args:?}");
    }
}

#[test]
fn bundled_scenarios_pass() {
    for name in ["experiment1", "experiment2", "experiment3", "experiment4", "limits"] {
        let out = jamkit(&["simulate", "--scenario", name]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jamkit(&["attack-network", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(jamkit(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(jamkit(&["tag", "--snapshot", s(&tmp(&dir, "missing.json"))]).status.code(), Some(2));
    let bad_out = dir.path().join("no/such/dir/out.csv");
    assert_eq!(jamkit(&["tag", "--snapshot", SNAPSHOT, "--out", s(&bad_out)]).status.code(), Some(2));
    assert!(!bad_out.exists());
    let garbage = tmp(&dir, "garbage.json");
    std::fs::write(&garbage, "[1, 2").unwrap();
    assert_eq!(jamkit(&["ingest", "--snapshot", s(&garbage)]).status.code(), Some(2));
    assert_eq!(jamkit(&["attack-network", "--snapshot", SNAPSHOT, "--tau-min", "2016"]).status.code(), Some(3));
    assert_eq!(jamkit(&["attack-node", "--snapshot", SNAPSHOT, "--all", "--tau-min", "3000"]).status.code(), Some(3));
    assert_eq!(jamkit(&["attack-network", "--snapshot", SNAPSHOT, "--budget", "1"]).status.code(), Some(3));
    let script = tmp(&dir, "bad.scn");
    std::fs::write(&script, "open ab A B 1000000\nassert_pending ab 1\n").unwrap();
    let out = jamkit(&["simulate", "--scenario", s(&script)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn event_log_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let events = tmp(&dir, "events.jsonl");
    let out = jamkit(&["simulate", "--scenario", "experiment1", "--events", s(&events)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&events).unwrap();
    let kinds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["event"].as_str().unwrap().to_string())
        .collect();
    assert!(kinds.iter().any(|k| k == "force_closed"));
    assert!(kinds.iter().any(|k| k == "payment_failed"));
}
