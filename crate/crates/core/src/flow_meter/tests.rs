use super::*;

const A: [u8; 4] = [10, 0, 0, 1];
const B: [u8; 4] = [10, 0, 0, 2];

fn tcp(ts_s: f64, fwd: bool, ip_len: u16, flags: u8, window: u16, ttl: u8) -> PacketRecord {
    let (src, dst, sport, dport) = if fwd { (A, B, 40000, 80) } else { (B, A, 80, 40000) };
    PacketRecord {
        ts_micros: (ts_s * 1e6).round() as u64,
        src_ip: src.into(),
        dst_ip: dst.into(),
        src_port: sport,
        dst_port: dport,
        protocol: PROTO_TCP,
        ttl,
        ip_total_len: ip_len,
        l4_header_len: 20,
        payload_len: ip_len - 40,
        tcp_flags: flags,
        tcp_window: window,
        tcp_seq: (ts_s * 1000.0) as u32,
        icmp_type: 0,
        icmp_code: 0,
    }
}

fn single_flow(packets: &[PacketRecord]) -> FlowRecord {
    let flows = assemble_flows(packets, FlowTimeouts::default());
    assert_eq!(flows.len(), 1);
    flows.into_iter().next().unwrap()
}

fn nf(flow: &FlowRecord, name: &str) -> f64 {
    let schema = FeatureSchema::netflow();
    compute_netflow_features(flow).values[schema.learnable_index(name).unwrap()]
}

fn cicv(flow: &FlowRecord, name: &str) -> f64 {
    let schema = FeatureSchema::cic();
    compute_cic_features(flow, 5.0).values[schema.learnable_index(name).unwrap()]
}

#[test]
fn single_forward_packet_netflow() {
    let flow = single_flow(&[tcp(0.0, true, 60, tcp_flags::SYN, 8192, 64)]);
    assert_eq!(nf(&flow, "FLOW_DURATION_MILLISECONDS"), 0.0);
    assert_eq!(nf(&flow, "LONGEST_FLOW_PKT"), 60.0);
    assert_eq!(nf(&flow, "SHORTEST_FLOW_PKT"), 60.0);
    assert_eq!(nf(&flow, "TCP_WIN_MAX_IN"), 8192.0);
    assert_eq!(nf(&flow, "TCP_WIN_MAX_OUT"), 0.0);
    assert_eq!(nf(&flow, "L7_PROTO"), 7.0);
    assert_eq!(nf(&flow, "SRC_TO_DST_SECOND_BYTES"), 0.0);
}

#[test]
fn ttl_extrema() {
    let flow = single_flow(&[
        tcp(0.0, true, 60, 0, 1, 64),
        tcp(0.1, false, 60, 0, 1, 63),
        tcp(0.2, true, 60, 0, 1, 128),
    ]);
    assert_eq!(nf(&flow, "MIN_TTL"), 63.0);
    assert_eq!(nf(&flow, "MAX_TTL"), 128.0);
}

#[test]
fn byte_and_packet_counters() {
    let flow = single_flow(&[
        tcp(0.0, true, 100, tcp_flags::ACK, 1, 64),
        tcp(0.5, false, 40, tcp_flags::ACK, 1, 64),
        tcp(1.0, true, 100, tcp_flags::ACK, 1, 64),
        tcp(2.0, true, 100, tcp_flags::PSH | tcp_flags::ACK, 1, 64),
    ]);
    assert_eq!(nf(&flow, "IN_BYTES"), 300.0);
    assert_eq!(nf(&flow, "OUT_BYTES"), 40.0);
    assert_eq!(nf(&flow, "IN_PKTS"), 3.0);
    assert_eq!(nf(&flow, "OUT_PKTS"), 1.0);
    assert_eq!(nf(&flow, "FLOW_DURATION_MILLISECONDS"), 2000.0);
    assert_eq!(nf(&flow, "CLIENT_TCP_FLAGS"), f64::from(tcp_flags::PSH | tcp_flags::ACK));
    assert_eq!(nf(&flow, "SERVER_TCP_FLAGS"), f64::from(tcp_flags::ACK));
    assert_eq!(nf(&flow, "NUM_PKTS_UP_TO_128_BYTES"), 4.0);
    assert_eq!(nf(&flow, "SRC_TO_DST_SECOND_BYTES"), 150.0);
}

#[test]
fn retransmitted_segments() {
    let mut p1 = tcp(0.0, true, 140, tcp_flags::ACK, 1, 64);
    let mut p2 = tcp(0.3, true, 140, tcp_flags::ACK, 1, 64);
    p1.tcp_seq = 77;
    p2.tcp_seq = 77;
    let flow = single_flow(&[p1, p2]);
    assert_eq!(nf(&flow, "RETRANSMITTED_IN_PKTS"), 1.0);
    assert_eq!(nf(&flow, "RETRANSMITTED_IN_BYTES"), 100.0);
    assert_eq!(nf(&flow, "RETRANSMITTED_OUT_PKTS"), 0.0);
}

#[test]
fn icmp_type_columns() {
    let p = PacketRecord {
        protocol: PROTO_ICMP,
        src_port: 0,
        dst_port: 0,
        l4_header_len: 8,
        payload_len: 20,
        ip_total_len: 48,
        tcp_flags: 0,
        tcp_window: 0,
        icmp_type: 8,
        icmp_code: 0,
        ..tcp(0.0, true, 60, 0, 0, 64)
    };
    let flow = single_flow(&[p]);
    assert_eq!(nf(&flow, "ICMP_TYPE"), 2048.0);
    assert_eq!(nf(&flow, "ICMP_IPV4_TYPE"), 8.0);
}

#[test]
fn forward_iat_statistics() {
    let flow = single_flow(&[
        tcp(0.0, true, 100, 0, 1, 64),
        tcp(1.0, true, 100, 0, 1, 64),
        tcp(2.0, true, 100, 0, 1, 64),
    ]);
    assert_eq!(cicv(&flow, "Fwd IAT Mean"), 1_000_000.0);
    assert_eq!(cicv(&flow, "Fwd IAT Min"), 1_000_000.0);
    assert_eq!(cicv(&flow, "Fwd IAT Std"), 0.0);
    assert_eq!(cicv(&flow, "Fwd IAT Total"), 2_000_000.0);
    assert_eq!(cicv(&flow, "Fwd Packets/s"), 1.5);
}

#[test]
fn single_packet_flow_has_zero_time_statistics() {
    let flow = single_flow(&[tcp(3.0, true, 100, tcp_flags::SYN, 512, 64)]);
    let cic = FeatureSchema::cic();
    let row = compute_cic_features(&flow, 5.0);
    for name in cic.learnable_names() {
        if name.contains("IAT") || name.starts_with("Active") || name.starts_with("Idle") || name.ends_with("/s") {
            assert_eq!(row.values[cic.learnable_index(name).unwrap()], 0.0, "{name}");
        }
    }
    assert_eq!(cicv(&flow, "FWD Init Win Bytes"), 512.0);
    assert_eq!(cicv(&flow, "Fwd Seg Size Min"), 60.0);
}

#[test]
fn syn_counted_in_both_directions() {
    let flow = single_flow(&[
        tcp(0.0, true, 40, tcp_flags::SYN, 1, 64),
        tcp(0.01, false, 40, tcp_flags::SYN | tcp_flags::ACK, 1, 64),
    ]);
    assert_eq!(cicv(&flow, "SYN Flag Count"), 2.0);
    assert_eq!(cicv(&flow, "ACK Flag Count"), 1.0);
    assert_eq!(cicv(&flow, "Fwd Header Length"), 20.0);
    assert_eq!(cicv(&flow, "Bwd Header Length"), 20.0);
}

#[test]
fn active_and_idle_periods() {
    // active 0..1 s, idle 1..8 s (7 s > 5 s), active 8..10 s
    let flow = single_flow(&[
        tcp(0.0, true, 100, 0, 1, 64),
        tcp(1.0, true, 100, 0, 1, 64),
        tcp(8.0, true, 100, 0, 1, 64),
        tcp(10.0, false, 100, 0, 1, 64),
    ]);
    assert_eq!(cicv(&flow, "Idle Mean"), 7e6);
    assert_eq!(cicv(&flow, "Idle Min"), 7e6);
    assert_eq!(cicv(&flow, "Active Max"), 2e6);
    assert_eq!(cicv(&flow, "Active Min"), 1e6);
    assert_eq!(cicv(&flow, "Active Mean"), 1.5e6);
    // gaps of 7 s and 2 s exceed one second: three subflows
    assert_eq!(cicv(&flow, "Subflow Fwd Packets"), 1.0);
}

#[test]
fn forward_bulk_transfer() {
    let mut ps: Vec<PacketRecord> = (0..5).map(|i| tcp(i as f64 * 0.1, true, 1040, 0, 1, 64)).collect();
    ps.push(tcp(0.6, false, 40, tcp_flags::ACK, 1, 64));
    let flow = single_flow(&ps);
    assert_eq!(cicv(&flow, "Fwd Packet/Bulk Avg"), 5.0);
    assert_eq!(cicv(&flow, "Fwd Bytes/Bulk Avg"), 5000.0);
    assert!((cicv(&flow, "Fwd Bulk Rate Avg") - 5000.0 / 0.4).abs() < 1e-6);
    assert_eq!(cicv(&flow, "Bwd Packet/Bulk Avg"), 0.0);
}

#[test]
fn csv_header_and_formatting() {
    let flow = single_flow(&[tcp(1.5, true, 60, tcp_flags::SYN, 8192, 64)]);
    let table = FeatureTable { schema: FeatureSchema::netflow().clone(), rows: vec![compute_netflow_features(&flow)] };
    let mut out = Vec::new();
    table.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("IPV4_SRC_ADDR,L4_SRC_PORT,IPV4_DST_ADDR,L4_DST_PORT,PROTOCOL,"));
    assert!(lines.next().unwrap().starts_with("10.0.0.1,40000,10.0.0.2,80,6,7,60,1,0,0,2,"));
    assert!(!text.contains('\r'));
}

#[test]
fn flow_index_round_trip() {
    let flows = assemble_flows(
        &[tcp(0.0, true, 60, 0, 1, 64), tcp(0.5, false, 60, 0, 1, 64)],
        FlowTimeouts::default(),
    );
    let spans: Vec<FlowSpan> = flows.iter().map(FlowSpan::from).collect();
    let mut buf = Vec::new();
    write_flow_index(&mut buf, &spans).unwrap();
    assert_eq!(read_flow_index(&buf[..]).unwrap(), spans);
}
