//! Bidirectional flow assembly.

use std::collections::HashMap;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::packet::{tcp_flags, PacketRecord};

/// Flow key with endpoint A fixed to the source of the flow's first packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowKey {
    pub ip_a: Ipv4Addr,
    pub ip_b: Ipv4Addr,
    pub port_a: u16,
    pub port_b: u16,
    pub protocol: u8,
}

impl FlowKey {
    /// Key for a flow opened by `p`.
    pub fn opened_by(p: &PacketRecord) -> Self {
        Self {
            ip_a: p.src_ip,
            ip_b: p.dst_ip,
            port_a: p.src_port,
            port_b: p.dst_port,
            protocol: p.protocol,
        }
    }

    pub fn is_forward(&self, p: &PacketRecord) -> bool {
        p.src_ip == self.ip_a && p.src_port == self.port_a
    }

    /// Orientation-free identity used for the flow table.
    fn unordered(p: &PacketRecord) -> UnorderedKey {
        let s = (p.src_ip, p.src_port);
        let d = (p.dst_ip, p.dst_port);
        let (lo, hi) = if s <= d { (s, d) } else { (d, s) };
        (lo, hi, p.protocol)
    }
}

type UnorderedKey = ((Ipv4Addr, u16), (Ipv4Addr, u16), u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpiryReason {
    IdleTimeout,
    ActiveTimeout,
    EndOfCapture,
    FinRst,
}

/// Per-packet observation kept in a flow's direction lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketObs {
    pub ts: u64,
    pub ip_total_len: u16,
    pub payload_len: u16,
    pub header_len: u16,
    pub tcp_flags: u8,
    pub tcp_window: u16,
    pub ttl: u8,
    pub tcp_seq: u32,
    /// Position of the packet within the flow, across both directions.
    pub arrival: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub key: FlowKey,
    pub first_ts: u64,
    pub last_ts: u64,
    pub fwd_packets: Vec<PacketObs>,
    pub bwd_packets: Vec<PacketObs>,
    pub expiry_reason: ExpiryReason,
    /// ICMP type and code of the first packet, for ICMP flows.
    pub icmp: Option<(u8, u8)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl FlowRecord {
    pub fn packet_count(&self) -> usize {
        self.fwd_packets.len() + self.bwd_packets.len()
    }

    pub fn duration_micros(&self) -> u64 {
        self.last_ts - self.first_ts
    }

    /// All packets in arrival order, tagged with their direction.
    pub fn packets_in_order(&self) -> Vec<(Direction, PacketObs)> {
        let mut all: Vec<(Direction, PacketObs)> = self
            .fwd_packets
            .iter()
            .map(|p| (Direction::Forward, *p))
            .chain(self.bwd_packets.iter().map(|p| (Direction::Backward, *p)))
            .collect();
        all.sort_by_key(|(_, p)| p.arrival);
        all
    }
}

/// Timeouts in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowTimeouts {
    pub idle_timeout: f64,
    pub active_timeout: f64,
}

impl Default for FlowTimeouts {
    fn default() -> Self {
        Self { idle_timeout: 15.0, active_timeout: 120.0 }
    }
}

struct ActiveFlow {
    record: FlowRecord,
    order: u64,
    fin_fwd: bool,
    fin_bwd: bool,
}

impl ActiveFlow {
    fn open(p: &PacketRecord, order: u64) -> Self {
        let key = FlowKey::opened_by(p);
        let icmp = (p.protocol == super::packet::PROTO_ICMP).then_some((p.icmp_type, p.icmp_code));
        Self {
            record: FlowRecord {
                key,
                first_ts: p.ts_micros,
                last_ts: p.ts_micros,
                fwd_packets: Vec::new(),
                bwd_packets: Vec::new(),
                expiry_reason: ExpiryReason::EndOfCapture,
                icmp,
            },
            order,
            fin_fwd: false,
            fin_bwd: false,
        }
    }

    /// Adds the packet and reports whether the TCP session is now closed.
    fn push(&mut self, p: &PacketRecord) -> bool {
        let obs = PacketObs {
            ts: p.ts_micros,
            ip_total_len: p.ip_total_len,
            payload_len: p.payload_len,
            header_len: p.l4_header_len,
            tcp_flags: p.tcp_flags,
            tcp_window: p.tcp_window,
            ttl: p.ttl,
            tcp_seq: p.tcp_seq,
            arrival: self.record.packet_count() as u32,
        };
        self.record.last_ts = p.ts_micros;
        let fin = p.is_tcp() && p.has_flag(tcp_flags::FIN);
        if self.record.key.is_forward(p) {
            self.record.fwd_packets.push(obs);
            self.fin_fwd |= fin;
        } else {
            self.record.bwd_packets.push(obs);
            self.fin_bwd |= fin;
        }
        p.is_tcp() && (p.has_flag(tcp_flags::RST) || (self.fin_fwd && self.fin_bwd))
    }
}

const SWEEP_INTERVAL_MICROS: u64 = 1_000_000;

/// Groups packets into bidirectional flows.
///
/// A flow expires when the gap since its last packet exceeds the idle timeout,
/// when its age exceeds the active timeout, after a TCP RST or FINs from both
/// sides, or at the end of the capture. Packets are stable-sorted by timestamp
/// first. Output is ordered by first packet time, ties by flow creation order.
pub fn assemble_flows(packets: &[PacketRecord], timeouts: FlowTimeouts) -> Vec<FlowRecord> {
    let idle = (timeouts.idle_timeout * 1e6).round() as u64;
    let active = (timeouts.active_timeout * 1e6).round() as u64;

    let sorted_storage;
    let packets = if packets.windows(2).all(|w| w[0].ts_micros <= w[1].ts_micros) {
        packets
    } else {
        let mut v = packets.to_vec();
        v.sort_by_key(|p| p.ts_micros);
        sorted_storage = v;
        &sorted_storage[..]
    };

    let mut table: HashMap<UnorderedKey, ActiveFlow> = HashMap::new();
    let mut done: Vec<(u64, FlowRecord)> = Vec::new();
    let mut next_order = 0u64;
    let mut last_sweep = packets.first().map_or(0, |p| p.ts_micros);

    let finish = |flow: ActiveFlow, reason: ExpiryReason, done: &mut Vec<(u64, FlowRecord)>| {
        let mut record = flow.record;
        record.expiry_reason = reason;
        done.push((flow.order, record));
    };

    for p in packets {
        let ts = p.ts_micros;
        if ts.saturating_sub(last_sweep) >= SWEEP_INTERVAL_MICROS {
            let stale: Vec<UnorderedKey> = table
                .iter()
                .filter(|(_, f)| ts - f.record.last_ts > idle)
                .map(|(k, _)| *k)
                .collect();
            for k in stale {
                let flow = table.remove(&k).expect("key collected from table");
                finish(flow, ExpiryReason::IdleTimeout, &mut done);
            }
            last_sweep = ts;
        }

        let key = FlowKey::unordered(p);
        if let Some(flow) = table.get(&key) {
            let reason = if ts - flow.record.last_ts > idle {
                Some(ExpiryReason::IdleTimeout)
            } else if ts - flow.record.first_ts > active {
                Some(ExpiryReason::ActiveTimeout)
            } else {
                None
            };
            if let Some(reason) = reason {
                let flow = table.remove(&key).expect("present");
                finish(flow, reason, &mut done);
            }
        }
        let flow = table.entry(key).or_insert_with(|| {
            next_order += 1;
            ActiveFlow::open(p, next_order)
        });
        if flow.push(p) {
            let flow = table.remove(&key).expect("present");
            finish(flow, ExpiryReason::FinRst, &mut done);
        }
    }
    for (_, flow) in table.drain() {
        finish(flow, ExpiryReason::EndOfCapture, &mut done);
    }
    done.sort_by_key(|(order, r)| (r.first_ts, *order));
    done.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_meter::packet::{PROTO_TCP, PROTO_UDP};

    pub(crate) fn pkt(ts_s: f64, src: [u8; 4], sport: u16, dst: [u8; 4], dport: u16, flags: u8) -> PacketRecord {
        PacketRecord {
            ts_micros: (ts_s * 1e6) as u64,
            src_ip: src.into(),
            dst_ip: dst.into(),
            src_port: sport,
            dst_port: dport,
            protocol: PROTO_TCP,
            ttl: 64,
            ip_total_len: 40,
            l4_header_len: 20,
            payload_len: 0,
            tcp_flags: flags,
            tcp_window: 1024,
            tcp_seq: 0,
            icmp_type: 0,
            icmp_code: 0,
        }
    }

    const A: [u8; 4] = [10, 0, 0, 1];
    const B: [u8; 4] = [10, 0, 0, 2];

    #[test]
    fn close_packets_share_a_flow() {
        let ps = [pkt(0.0, A, 1234, B, 80, 0x10), pkt(1.0, A, 1234, B, 80, 0x10)];
        let flows = assemble_flows(&ps, FlowTimeouts::default());
        assert_eq!(flows.len(), 1);
        assert_eq!(flows[0].fwd_packets.len(), 2);
        assert_eq!(flows[0].expiry_reason, ExpiryReason::EndOfCapture);
    }

    #[test]
    fn idle_gap_splits_flow() {
        let ps = [pkt(0.0, A, 1234, B, 80, 0x10), pkt(20.0, A, 1234, B, 80, 0x10)];
        let flows = assemble_flows(&ps, FlowTimeouts::default());
        assert_eq!(flows.len(), 2);
        assert_eq!(flows[0].expiry_reason, ExpiryReason::IdleTimeout);
        assert_eq!(flows[1].expiry_reason, ExpiryReason::EndOfCapture);
    }

    #[test]
    fn reply_joins_flow_and_keeps_initiator_as_a() {
        let ps = [
            pkt(0.0, A, 1234, B, 80, tcp_flags::SYN),
            pkt(0.01, B, 80, A, 1234, tcp_flags::SYN | tcp_flags::ACK),
        ];
        let flows = assemble_flows(&ps, FlowTimeouts::default());
        assert_eq!(flows.len(), 1);
        let f = &flows[0];
        assert_eq!((f.fwd_packets.len(), f.bwd_packets.len()), (1, 1));
        assert_eq!((f.key.ip_a, f.key.port_a), (A.into(), 1234));
    }

    #[test]
    fn active_timeout_splits_long_flow() {
        let ps: Vec<_> = (0..=13).map(|i| pkt(i as f64 * 10.0, A, 1, B, 2, 0x10)).collect();
        let flows = assemble_flows(&ps, FlowTimeouts::default());
        assert_eq!(flows.len(), 2);
        assert_eq!(flows[0].expiry_reason, ExpiryReason::ActiveTimeout);
        assert_eq!(flows[0].packet_count(), 13);
    }

    #[test]
    fn fin_from_both_sides_and_rst_close() {
        let f = tcp_flags::FIN | tcp_flags::ACK;
        let ps = [
            pkt(0.0, A, 1, B, 2, f),
            pkt(0.1, B, 2, A, 1, f),
            pkt(0.2, A, 1, B, 2, tcp_flags::ACK),
            pkt(0.3, A, 1, B, 2, tcp_flags::RST),
            pkt(0.4, A, 1, B, 2, tcp_flags::ACK),
        ];
        let flows = assemble_flows(&ps, FlowTimeouts::default());
        let sizes: Vec<_> = flows.iter().map(|f| (f.packet_count(), f.expiry_reason)).collect();
        assert_eq!(
            sizes,
            vec![
                (2, ExpiryReason::FinRst),
                (2, ExpiryReason::FinRst),
                (1, ExpiryReason::EndOfCapture)
            ]
        );
    }

    #[test]
    fn unsorted_input_is_sorted() {
        let ps = [pkt(1.0, A, 1, B, 2, 0x10), pkt(0.0, B, 2, A, 1, 0x10)];
        let flows = assemble_flows(&ps, FlowTimeouts::default());
        assert_eq!(flows.len(), 1);
        assert_eq!(flows[0].key.ip_a, Ipv4Addr::from(B));
        assert_eq!(flows[0].first_ts, 0);
    }

    #[test]
    fn sweep_marks_silent_flows_idle() {
        let mut ps = vec![pkt(0.0, A, 1, B, 2, 0x10)];
        ps.push(PacketRecord { protocol: PROTO_UDP, ..pkt(30.0, A, 5, B, 6, 0) });
        let flows = assemble_flows(&ps, FlowTimeouts::default());
        assert_eq!(flows[0].expiry_reason, ExpiryReason::IdleTimeout);
    }
}
