//! Seeded synthetic capture: benign request/response traffic plus a SYN
//! flood ("DDoS") and a high-rate repetitive flood ("DoS"), with the
//! ground-truth events that label them.

use std::net::Ipv4Addr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::GroundTruthEvent;
use crate::flow_meter::packet::{tcp_flags, PacketRecord, PROTO_TCP, PROTO_UDP};

pub const DDOS: &str = "DDoS";
pub const DOS: &str = "DoS";

pub const DDOS_VICTIM: Ipv4Addr = Ipv4Addr::new(192, 168, 1, 10);
pub const DOS_ATTACKER: Ipv4Addr = Ipv4Addr::new(10, 66, 1, 5);
pub const DOS_VICTIM: Ipv4Addr = Ipv4Addr::new(192, 168, 1, 20);

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub benign_sessions: usize,
    pub dns_queries: usize,
    pub ddos_flows: usize,
    pub dos_flows: usize,
    /// Length of the benign activity window, seconds.
    pub duration_secs: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { seed: 0, benign_sessions: 700, dns_queries: 300, ddos_flows: 500, dos_flows: 300, duration_secs: 900 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Sorted by timestamp.
    pub packets: Vec<PacketRecord>,
    pub events: Vec<GroundTruthEvent>,
}

/// Capture start, microseconds since the epoch.
pub const START_MICROS: u64 = 1_700_000_000_000_000;

const SEC: u64 = 1_000_000;

struct Endpoint {
    ip: Ipv4Addr,
    port: u16,
    ttl: u8,
    window: u16,
    seq: u32,
}

/// One TCP conversation; `send` emits a segment and advances the sender's sequence number.
struct Conversation {
    client: Endpoint,
    server: Endpoint,
    packets: Vec<PacketRecord>,
}

impl Conversation {
    fn new(client: Endpoint, server: Endpoint) -> Self {
        Self { client, server, packets: Vec::new() }
    }

    fn send(&mut self, ts: u64, from_client: bool, flags: u8, payload: u16) {
        let (src, dst) = if from_client { (&mut self.client, &self.server) } else { (&mut self.server, &self.client) };
        // 12 bytes of options on SYNs (MSS, SACK-permitted, window scale)
        let l4 = if flags & tcp_flags::SYN != 0 { 32 } else { 20 };
        self.packets.push(PacketRecord {
            ts_micros: ts,
            src_ip: src.ip,
            dst_ip: dst.ip,
            src_port: src.port,
            dst_port: dst.port,
            protocol: PROTO_TCP,
            ttl: src.ttl,
            ip_total_len: 20 + l4 + payload,
            l4_header_len: l4,
            payload_len: payload,
            tcp_flags: flags,
            tcp_window: src.window,
            tcp_seq: src.seq,
            icmp_type: 0,
            icmp_code: 0,
        });
        let advance = u32::from(payload) + u32::from(flags & (tcp_flags::SYN | tcp_flags::FIN) != 0);
        src.seq = src.seq.wrapping_add(advance);
    }
}

fn udp(ts: u64, src: (Ipv4Addr, u16), dst: (Ipv4Addr, u16), ttl: u8, payload: u16) -> PacketRecord {
    PacketRecord {
        ts_micros: ts,
        src_ip: src.0,
        dst_ip: dst.0,
        src_port: src.1,
        dst_port: dst.1,
        protocol: PROTO_UDP,
        ttl,
        ip_total_len: 28 + payload,
        l4_header_len: 8,
        payload_len: payload,
        tcp_flags: 0,
        tcp_window: 0,
        tcp_seq: 0,
        icmp_type: 0,
        icmp_code: 0,
    }
}

fn benign_client(rng: &mut ChaCha8Rng) -> Ipv4Addr {
    Ipv4Addr::new(192, 168, 1, rng.random_range(100..=160))
}

/// A client session: handshake, a few request/response exchanges, orderly close.
fn benign_session(rng: &mut ChaCha8Rng, start: u64) -> Vec<PacketRecord> {
    let (server_ip, port) = match rng.random_range(0..10) {
        0..=4 => (Ipv4Addr::new(93, 184, 216, rng.random_range(1..=40)), 443),
        5..=7 => (Ipv4Addr::new(151, 101, 2, rng.random_range(1..=40)), 80),
        _ => (Ipv4Addr::new(198, 51, 100, rng.random_range(1..=10)), 22),
    };
    let client = Endpoint {
        ip: benign_client(rng),
        port: rng.random_range(32768..61000),
        ttl: 64,
        window: rng.random_range(29000..65535),
        seq: rng.random(),
    };
    let server = Endpoint {
        ip: server_ip,
        port,
        ttl: rng.random_range(48..=57),
        window: rng.random_range(26000..65535),
        seq: rng.random(),
    };
    let mut c = Conversation::new(client, server);
    let rtt = rng.random_range(8_000..60_000u64);
    let mut t = start;
    c.send(t, true, tcp_flags::SYN, 0);
    t += rtt / 2;
    c.send(t, false, tcp_flags::SYN | tcp_flags::ACK, 0);
    t += rtt / 2;
    c.send(t, true, tcp_flags::ACK, 0);
    let exchanges = rng.random_range(1..=6);
    for _ in 0..exchanges {
        t += rng.random_range(20_000..900_000u64);
        c.send(t, true, tcp_flags::PSH | tcp_flags::ACK, rng.random_range(80..700));
        t += rtt / 2 + rng.random_range(1_000..40_000u64);
        let segments = rng.random_range(1..=8);
        for s in 0..segments {
            let flags = if s + 1 == segments { tcp_flags::PSH | tcp_flags::ACK } else { tcp_flags::ACK };
            c.send(t, false, flags, rng.random_range(200..=1460));
            t += rng.random_range(300..4_000u64);
        }
        c.send(t + rtt / 2, true, tcp_flags::ACK, 0);
    }
    t += rng.random_range(50_000..2_000_000u64);
    c.send(t, true, tcp_flags::FIN | tcp_flags::ACK, 0);
    t += rtt / 2;
    c.send(t, false, tcp_flags::FIN | tcp_flags::ACK, 0);
    t += rtt / 2;
    c.send(t, true, tcp_flags::ACK, 0);
    c.packets
}

fn dns_query(rng: &mut ChaCha8Rng, start: u64) -> Vec<PacketRecord> {
    let client = (benign_client(rng), rng.random_range(32768..61000));
    let resolver = (Ipv4Addr::new(192, 168, 1, 1), 53);
    let q = rng.random_range(28..60);
    vec![
        udp(start, client, resolver, 64, q),
        udp(start + rng.random_range(500..30_000u64), resolver, client, 64, q + rng.random_range(16..180)),
    ]
}

/// SYN flood flow: spoofed-looking source retrying a SYN, victim answering
/// SYN-ACK, the handshake never completing.
fn ddos_flow(rng: &mut ChaCha8Rng, start: u64) -> Vec<PacketRecord> {
    let attacker = Endpoint {
        ip: Ipv4Addr::new(10, 66, 0, rng.random_range(1..=254)),
        port: rng.random_range(1024..65535),
        ttl: rng.random_range(240..=255),
        window: 1024,
        seq: rng.random(),
    };
    let victim = Endpoint { ip: DDOS_VICTIM, port: 80, ttl: 64, window: 29200, seq: rng.random() };
    let mut c = Conversation::new(attacker, victim);
    let mut t = start;
    let tries = rng.random_range(1..=3);
    for i in 0..tries {
        c.send(t, true, tcp_flags::SYN, 0);
        c.send(t + rng.random_range(50..400u64), false, tcp_flags::SYN | tcp_flags::ACK, 0);
        if i + 1 < tries {
            // retransmit with the original sequence number
            c.client.seq = c.client.seq.wrapping_sub(1);
        }
        t += rng.random_range(1_000..20_000u64);
    }
    c.packets
}

/// Repetitive flood: a full connection pushing the same small request at a
/// high rate, then resetting.
fn dos_flow(rng: &mut ChaCha8Rng, start: u64) -> Vec<PacketRecord> {
    let attacker = Endpoint { ip: DOS_ATTACKER, port: rng.random_range(1024..65535), ttl: 64, window: 512, seq: rng.random() };
    let victim = Endpoint { ip: DOS_VICTIM, port: 80, ttl: 64, window: 29200, seq: rng.random() };
    let mut c = Conversation::new(attacker, victim);
    let mut t = start;
    c.send(t, true, tcp_flags::SYN, 0);
    t += 200;
    c.send(t, false, tcp_flags::SYN | tcp_flags::ACK, 0);
    t += 200;
    c.send(t, true, tcp_flags::ACK, 0);
    let request = rng.random_range(40..=60);
    for _ in 0..rng.random_range(30..=80) {
        t += rng.random_range(300..2_500u64);
        c.send(t, true, tcp_flags::PSH | tcp_flags::ACK, request);
        t += rng.random_range(100..400u64);
        c.send(t, false, tcp_flags::ACK, 0);
    }
    t += 500;
    c.send(t, true, tcp_flags::RST, 0);
    c.packets
}

/// Generates the scenario. Attacks run in two windows inside the benign
/// activity: the SYN flood in the second quarter, the repetitive flood in
/// the third.
pub fn generate(cfg: &SynthConfig) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let span = cfg.duration_secs.max(8) * SEC;
    let mut packets = Vec::new();
    for _ in 0..cfg.benign_sessions {
        let start = START_MICROS + rng.random_range(0..span);
        packets.extend(benign_session(&mut rng, start));
    }
    for _ in 0..cfg.dns_queries {
        let start = START_MICROS + rng.random_range(0..span);
        packets.extend(dns_query(&mut rng, start));
    }
    let ddos_window = (START_MICROS + span / 4, START_MICROS + span / 2);
    for _ in 0..cfg.ddos_flows {
        let start = rng.random_range(ddos_window.0..ddos_window.1 - SEC);
        packets.extend(ddos_flow(&mut rng, start));
    }
    let dos_window = (START_MICROS + span / 2, START_MICROS + 3 * span / 4);
    for _ in 0..cfg.dos_flows {
        let start = rng.random_range(dos_window.0..dos_window.1 - SEC);
        packets.extend(dos_flow(&mut rng, start));
    }
    // stable sort keeps each conversation's packet order on equal timestamps
    packets.sort_by_key(|p| p.ts_micros);
    let events = vec![
        GroundTruthEvent {
            src_ip: None,
            dst_ip: Some(DDOS_VICTIM),
            protocol: Some(PROTO_TCP),
            start_ts: ddos_window.0,
            end_ts: ddos_window.1,
            attack_category: DDOS.into(),
        },
        GroundTruthEvent {
            src_ip: Some(DOS_ATTACKER),
            dst_ip: Some(DOS_VICTIM),
            protocol: Some(PROTO_TCP),
            start_ts: dos_window.0,
            end_ts: dos_window.1,
            attack_category: DOS.into(),
        },
    ];
    Scenario { packets, events }
}
