//! End-to-end checks of the command-line interface: file formats, exit
//! codes, and reproducibility of the emitted artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn ringcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringcast"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn gen_prints_a_parsable_graph() {
    let out = ringcast(&["gen", "--nodes", "10", "--edge-prob", "0.5", "--seed", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("10 "));
    // Edge count in the header matches the body.
    let m: usize = header.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert_eq!(text.lines().count(), m + 1);
}

#[test]
fn gen_exit_codes_follow_the_contract() {
    let bad_param = ringcast(&["gen", "--nodes", "10", "--edge-prob", "1.5"]);
    assert_eq!(bad_param.status.code(), Some(2));
    let hopeless = ringcast(&["gen", "--nodes", "40", "--edge-prob", "0.0001"]);
    assert_eq!(hopeless.status.code(), Some(3));
}

#[test]
fn ring_dump_of_the_six_node_example() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    std::fs::write(&graph, "6 6\n0 5\n1 3\n2 4\n3 4\n3 5\n4 5\n").unwrap();
    let out = ringcast(&["ring", "--graph", graph.to_str().unwrap(), "--root", "0"]);
    assert!(out.status.success());
    let dump = stdout(&out);
    let mut lines = dump.lines();
    assert_eq!(lines.next(), Some("10"));
    assert_eq!(lines.next(), Some("0 5 3 1 3 5 4 2 4 5"));
    assert!(dump.contains("sc 2: 6 8"));
}

#[test]
fn run_writes_ledger_and_summary_deterministically() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let common = [
        "run",
        "--nodes",
        "14",
        "--edge-prob",
        "0.4",
        "--subscribers",
        "4",
        "--loss",
        "0.05",
        "--seed",
        "11",
        "--duration",
        "800",
    ];
    for dir in [&dir_a, &dir_b] {
        let mut args: Vec<&str> = common.to_vec();
        args.push("--out");
        args.push(dir.path().to_str().unwrap());
        let out = ringcast(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ledger_a = read(&dir_a.path().join("ledger.jsonl"));
    let ledger_b = read(&dir_b.path().join("ledger.jsonl"));
    assert_eq!(ledger_a, ledger_b, "same flags, same bytes");
    let summary = read(&dir_a.path().join("summary.csv"));
    assert!(summary.starts_with("pub_id,channel,tx_count,delivered,dup_count,max_hops"));
    assert!(summary.lines().count() > 1);
}

#[test]
fn run_rejects_invalid_scenarios_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("sc.json");
    std::fs::write(
        &scenario,
        r#"{
            "topology": {"kind": "generate", "nodes": 5, "edge_prob": 0.6},
            "channels": 1,
            "apps": [{"time": 0, "node": 77, "action": {"subscribe": {"channel": 0}}}],
            "duration": 50,
            "seed": 1
        }"#,
    )
    .unwrap();
    let out = ringcast(&[
        "run",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("apps[0].node"), "stderr was: {err}");
}

#[test]
fn report_emits_histogram_ratio_and_gains() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = ringcast(&[
        "run",
        "--nodes",
        "12",
        "--edge-prob",
        "0.5",
        "--subscribers",
        "3",
        "--seed",
        "9",
        "--duration",
        "700",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rep_dir = dir.path().join("rep");
    let out = ringcast(&[
        "report",
        "--ledger",
        run_dir.join("ledger.jsonl").to_str().unwrap(),
        "--scenario",
        run_dir.join("scenario.json").to_str().unwrap(),
        "--baseline",
        "td",
        "--window",
        "100",
        "--out",
        rep_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&rep_dir.join("histogram.csv")).starts_with("hops,count"));
    assert!(read(&rep_dir.join("delivery_ratio.csv")).starts_with("start,end,"));
    let gains = read(&rep_dir.join("gain.csv"));
    assert!(gains.starts_with("pub_id,channel,publisher,ringcast_tx,baseline_tx,gain_pct"));
    assert!(gains.lines().count() > 1);
}

#[test]
fn sweep_outputs_are_reproducible() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = ringcast(&[
            "sweep",
            "--nodes",
            "12,20",
            "--edge-prob",
            "0.3",
            "--subscribers",
            "4",
            "--seeds",
            "3",
            "--publishers",
            "2",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(read(&dir_a.path().join("cells.csv")), read(&dir_b.path().join("cells.csv")));
    assert_eq!(
        read(&dir_a.path().join("aggregate.csv")),
        read(&dir_b.path().join("aggregate.csv"))
    );
    let cells = read(&dir_a.path().join("cells.csv"));
    assert!(cells.starts_with("n,p,s,seed,publisher,ringcast_tx,td_tx,ts_tx,shen_tx,ring_tx"));
}
