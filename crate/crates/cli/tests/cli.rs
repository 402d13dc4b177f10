use std::net::Ipv4Addr;
use std::path::Path;
use std::process::{Command, Output};

use flowlens::flow_meter::{tcp_flags, write_pcap, PacketRecord, PROTO_TCP, PROTO_UDP};

fn flowlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowlens")).args(args).output().expect("binary runs")
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn packet(ts: u64, src: [u8; 4], sport: u16, dst: [u8; 4], dport: u16, proto: u8, flags: u8, payload: u16) -> PacketRecord {
    let l4 = if proto == PROTO_TCP { 20 } else { 8 };
    PacketRecord {
        ts_micros: 1_000_000_000 + ts,
        src_ip: Ipv4Addr::from(src),
        dst_ip: Ipv4Addr::from(dst),
        src_port: sport,
        dst_port: dport,
        protocol: proto,
        ttl: 64,
        ip_total_len: 20 + l4 + payload,
        l4_header_len: l4,
        payload_len: payload,
        tcp_flags: flags,
        tcp_window: if proto == PROTO_TCP { 8192 } else { 0 },
        tcp_seq: ts as u32,
        icmp_type: 0,
        icmp_code: 0,
    }
}

/// 12 packets in 3 flows: a TCP exchange closed by RST, a DNS lookup, and a
/// four-packet UDP conversation.
fn fixture() -> Vec<PacketRecord> {
    let (c, s, d) = ([10, 0, 0, 1], [10, 0, 0, 2], [10, 0, 0, 53]);
    use tcp_flags::{ACK, PSH, RST, SYN};
    let mut v = vec![
        packet(0, c, 40000, s, 80, PROTO_TCP, SYN, 0),
        packet(100, s, 80, c, 40000, PROTO_TCP, SYN | ACK, 0),
        packet(200, c, 40000, s, 80, PROTO_TCP, ACK, 0),
        packet(300, c, 40000, s, 80, PROTO_TCP, PSH | ACK, 120),
        packet(900, s, 80, c, 40000, PROTO_TCP, PSH | ACK, 800),
        packet(1000, c, 40000, s, 80, PROTO_TCP, RST, 0),
        packet(50, c, 5353, d, 53, PROTO_UDP, 0, 40),
        packet(350, d, 53, c, 5353, PROTO_UDP, 0, 90),
        packet(60, c, 6000, s, 7000, PROTO_UDP, 0, 10),
        packet(70, s, 7000, c, 6000, PROTO_UDP, 0, 10),
        packet(80, c, 6000, s, 7000, PROTO_UDP, 0, 10),
        packet(90, s, 7000, c, 6000, PROTO_UDP, 0, 10),
    ];
    v.sort_by_key(|p| p.ts_micros);
    v
}

fn data_lines(path: &str) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn extract_fixture_has_one_row_per_flow_in_both_schemas() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("f.pcap"), write_pcap(&fixture()).unwrap()).unwrap();
    for schema in ["netflow_v2_style", "cic_style"] {
        let out = p(dir.path(), &format!("{schema}.csv"));
        let o = flowlens(&["extract", "--pcap", &p(dir.path(), "f.pcap"), "--schema", schema, "--out", &out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(data_lines(&out), 3);
        assert_eq!(data_lines(&p(dir.path(), &format!("{schema}.flows.csv"))), 3);
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(p(dir.path(), &format!("{schema}.meta.json"))).unwrap()).unwrap();
        assert_eq!(meta["packets"], 12);
        assert_eq!(meta["flows"], 3);
    }
}

#[test]
fn empty_capture_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("e.pcap"), write_pcap(&[]).unwrap()).unwrap();
    let out = p(dir.path(), "e.csv");
    let o = flowlens(&["extract", "--pcap", &p(dir.path(), "e.pcap"), "--schema", "cic", "--out", &out]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("Flow ID,"));
}

#[test]
fn bad_inputs_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.pcap"), b"not a capture").unwrap();
    let out = p(dir.path(), "x.csv");
    let o = flowlens(&["extract", "--pcap", &p(dir.path(), "junk.pcap"), "--schema", "nf", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlens(&["extract", "--pcap", &p(dir.path(), "missing.pcap"), "--schema", "nf", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlens(&["extract", "--pcap", &p(dir.path(), "junk.pcap"), "--schema", "argus", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    let o = flowlens(&["report", "--out-dir", &p(dir.path(), "r")]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(dir.path().join("bad.conf"), "tress = 3\n").unwrap();
    let o = flowlens(&["--config", &p(dir.path(), "bad.conf"), "report", "--out-dir", &p(dir.path(), "r")]);
    assert_eq!(o.status.code(), Some(2));
}

fn small_pipeline(dir: &Path) {
    let run = |args: &[&str]| {
        let o = flowlens(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    run(&[
        "synth", "--pcap", &p(dir, "c.pcap"), "--truth", &p(dir, "t.csv"),
        "--benign-sessions", "60", "--dns-queries", "30", "--ddos-flows", "40", "--dos-flows", "30",
    ]);
    for s in ["nf", "cic"] {
        run(&["extract", "--pcap", &p(dir, "c.pcap"), "--schema", s, "--out", &p(dir, &format!("{s}.csv"))]);
        run(&[
            "label", "--features", &p(dir, &format!("{s}.csv")), "--truth", &p(dir, "t.csv"),
            "--out", &p(dir, &format!("{s}.l.csv")),
        ]);
    }
}

#[test]
fn model_from_another_schema_exits_with_status_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_pipeline(d);
    let o = flowlens(&["train", "--data", &p(d, "nf.l.csv"), "--model-kind", "rf", "--trees", "5", "--out", &p(d, "m.json")]);
    assert!(o.status.success());
    let o = flowlens(&["eval", "--data", &p(d, "cic.l.csv"), "--model", &p(d, "m.json"), "--out", &p(d, "e.csv")]);
    assert_eq!(o.status.code(), Some(3));
    let o = flowlens(&["explain", "--data", &p(d, "cic.l.csv"), "--model", &p(d, "m.json"), "--out", &p(d, "x.csv")]);
    assert_eq!(o.status.code(), Some(3));
    let o = flowlens(&["eval", "--data", &p(d, "nf.l.csv"), "--model", &p(d, "m.json"), "--out", &p(d, "e.csv")]);
    assert!(o.status.success());
    let o = flowlens(&["explain", "--data", &p(d, "nf.l.csv"), "--model", &p(d, "m.json"), "--method", "exact", "--out", &p(d, "x.csv")]);
    assert_eq!(o.status.code(), Some(2), "39 features is beyond exact enumeration");
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_pipeline(d);
    std::fs::write(d.join("run.conf"), "# small forest\ntrees = 3\nfolds = 3\nidle_timeout = 4\n").unwrap();
    let conf = p(d, "run.conf");
    let o = flowlens(&["--config", &conf, "eval", "--data", &p(d, "nf.l.csv"), "--model-kind", "rf", "--out", &p(d, "a.csv")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let folds = |name: &str| {
        std::fs::read_to_string(p(d, name)).unwrap().lines().filter(|l| !l.contains(",mean,") && !l.starts_with("dataset")).count()
    };
    assert_eq!(folds("a.csv"), 3);
    let o = flowlens(&[
        "--config", &conf, "eval", "--data", &p(d, "nf.l.csv"), "--model-kind", "rf", "--folds", "2", "--out", &p(d, "b.csv"),
    ]);
    assert!(o.status.success());
    assert_eq!(folds("b.csv"), 2);
}
