//! NetFlow-v2-style per-flow counters and extrema.
//!
//! IN_* columns describe the forward (client-to-server) direction and OUT_*
//! the backward one. Packet sizes are full IPv4 lengths.

use std::collections::HashSet;

use super::flow::{FlowRecord, PacketObs};
use super::packet::{PROTO_TCP};

/// nDPI protocol ids for the handful of well-known ports we recognise.
pub fn l7_proto_for_ports(port_a: u16, port_b: u16) -> u16 {
    fn by_port(port: u16) -> Option<u16> {
        match port {
            21 => Some(1),   // FTP_CONTROL
            22 => Some(92),  // SSH
            53 => Some(5),   // DNS
            80 => Some(7),   // HTTP
            443 => Some(91), // TLS
            _ => None,
        }
    }
    let (lo, hi) = if port_a <= port_b { (port_a, port_b) } else { (port_b, port_a) };
    by_port(lo).or_else(|| by_port(hi)).unwrap_or(0)
}

struct Retransmits {
    packets: u64,
    bytes: u64,
}

/// A data segment whose sequence number was already seen in the same direction.
fn retransmits(flow: &FlowRecord, packets: &[PacketObs]) -> Retransmits {
    let mut r = Retransmits { packets: 0, bytes: 0 };
    if flow.key.protocol != PROTO_TCP {
        return r;
    }
    let mut seen = HashSet::new();
    for p in packets.iter().filter(|p| p.payload_len > 0) {
        if !seen.insert(p.tcp_seq) {
            r.packets += 1;
            r.bytes += u64::from(p.payload_len);
        }
    }
    r
}

fn rate(amount: f64, micros: u64) -> f64 {
    if micros == 0 {
        0.0
    } else {
        amount / (micros as f64 / 1e6)
    }
}

fn span(packets: &[PacketObs]) -> u64 {
    match (packets.first(), packets.last()) {
        (Some(a), Some(b)) => b.ts - a.ts,
        _ => 0,
    }
}

pub(crate) struct NetflowStats<'a> {
    flow: &'a FlowRecord,
    in_bytes: f64,
    out_bytes: f64,
    all_flags: u8,
    client_flags: u8,
    server_flags: u8,
    min_ttl: u8,
    max_ttl: u8,
    shortest: u16,
    longest: u16,
    retrans_in: Retransmits,
    retrans_out: Retransmits,
    size_buckets: [u64; 5],
    win_max_in: u16,
    win_max_out: u16,
}

impl<'a> NetflowStats<'a> {
    pub(crate) fn new(flow: &'a FlowRecord) -> Self {
        let all = || flow.fwd_packets.iter().chain(flow.bwd_packets.iter());
        let sum = |ps: &[PacketObs]| ps.iter().map(|p| f64::from(p.ip_total_len)).sum::<f64>();
        let or = |ps: &[PacketObs]| ps.iter().fold(0u8, |acc, p| acc | p.tcp_flags);
        let mut size_buckets = [0u64; 5];
        for p in all() {
            let bucket = match p.ip_total_len {
                0..=128 => 0,
                129..=256 => 1,
                257..=512 => 2,
                513..=1024 => 3,
                _ => 4,
            };
            size_buckets[bucket] += 1;
        }
        Self {
            flow,
            in_bytes: sum(&flow.fwd_packets),
            out_bytes: sum(&flow.bwd_packets),
            all_flags: or(&flow.fwd_packets) | or(&flow.bwd_packets),
            client_flags: or(&flow.fwd_packets),
            server_flags: or(&flow.bwd_packets),
            min_ttl: all().map(|p| p.ttl).min().unwrap_or(0),
            max_ttl: all().map(|p| p.ttl).max().unwrap_or(0),
            shortest: all().map(|p| p.ip_total_len).min().unwrap_or(0),
            longest: all().map(|p| p.ip_total_len).max().unwrap_or(0),
            retrans_in: retransmits(flow, &flow.fwd_packets),
            retrans_out: retransmits(flow, &flow.bwd_packets),
            size_buckets,
            win_max_in: flow.fwd_packets.iter().map(|p| p.tcp_window).max().unwrap_or(0),
            win_max_out: flow.bwd_packets.iter().map(|p| p.tcp_window).max().unwrap_or(0),
        }
    }

    pub(crate) fn identifier(&self, name: &str) -> Option<String> {
        let k = &self.flow.key;
        Some(match name {
            "IPV4_SRC_ADDR" => k.ip_a.to_string(),
            "L4_SRC_PORT" => k.port_a.to_string(),
            "IPV4_DST_ADDR" => k.ip_b.to_string(),
            "L4_DST_PORT" => k.port_b.to_string(),
            _ => return None,
        })
    }

    pub(crate) fn value(&self, name: &str) -> Option<f64> {
        let f = self.flow;
        let duration = f.duration_micros();
        let icmp = f.icmp.unwrap_or((0, 0));
        let v = match name {
            "PROTOCOL" => f64::from(f.key.protocol),
            "L7_PROTO" => f64::from(l7_proto_for_ports(f.key.port_a, f.key.port_b)),
            "IN_BYTES" => self.in_bytes,
            "IN_PKTS" => f.fwd_packets.len() as f64,
            "OUT_BYTES" => self.out_bytes,
            "OUT_PKTS" => f.bwd_packets.len() as f64,
            "TCP_FLAGS" => f64::from(self.all_flags),
            "CLIENT_TCP_FLAGS" => f64::from(self.client_flags),
            "SERVER_TCP_FLAGS" => f64::from(self.server_flags),
            "FLOW_DURATION_MILLISECONDS" => duration as f64 / 1e3,
            "DURATION_IN" => span(&f.fwd_packets) as f64 / 1e3,
            "DURATION_OUT" => span(&f.bwd_packets) as f64 / 1e3,
            "MIN_TTL" => f64::from(self.min_ttl),
            "MAX_TTL" => f64::from(self.max_ttl),
            "LONGEST_FLOW_PKT" | "MAX_IP_PKT_LEN" => f64::from(self.longest),
            "SHORTEST_FLOW_PKT" | "MIN_IP_PKT_LEN" => f64::from(self.shortest),
            "SRC_TO_DST_SECOND_BYTES" => rate(self.in_bytes, duration),
            "DST_TO_SRC_SECOND_BYTES" => rate(self.out_bytes, duration),
            "RETRANSMITTED_IN_BYTES" => self.retrans_in.bytes as f64,
            "RETRANSMITTED_IN_PKTS" => self.retrans_in.packets as f64,
            "RETRANSMITTED_OUT_BYTES" => self.retrans_out.bytes as f64,
            "RETRANSMITTED_OUT_PKTS" => self.retrans_out.packets as f64,
            "SRC_TO_DST_AVG_THROUGHPUT" => rate(8.0 * self.in_bytes, duration),
            "DST_TO_SRC_AVG_THROUGHPUT" => rate(8.0 * self.out_bytes, duration),
            "NUM_PKTS_UP_TO_128_BYTES" => self.size_buckets[0] as f64,
            "NUM_PKTS_128_TO_256_BYTES" => self.size_buckets[1] as f64,
            "NUM_PKTS_256_TO_512_BYTES" => self.size_buckets[2] as f64,
            "NUM_PKTS_512_TO_1024_BYTES" => self.size_buckets[3] as f64,
            "NUM_PKTS_1024_TO_1514_BYTES" => self.size_buckets[4] as f64,
            "TCP_WIN_MAX_IN" => f64::from(self.win_max_in),
            "TCP_WIN_MAX_OUT" => f64::from(self.win_max_out),
            "ICMP_TYPE" => f64::from(icmp.0) * 256.0 + f64::from(icmp.1),
            "ICMP_IPV4_TYPE" => f64::from(icmp.0),
            // payload inspection is not performed
            "DNS_QUERY_ID" | "DNS_QUERY_TYPE" | "DNS_TTL_ANSWER" | "FTP_COMMAND_RET_CODE" => 0.0,
            _ => return None,
        };
        Some(v)
    }
}
