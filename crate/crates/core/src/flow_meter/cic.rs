//! CICFlowMeter-style statistical flow features.
//!
//! Packet lengths are transport payload bytes, header lengths are transport
//! header bytes, and all times are microseconds. Rates are per second and are
//! 0 for zero-duration flows. Standard deviations use the n - 1 denominator.

use super::flow::{Direction, FlowRecord, PacketObs};
use super::packet::tcp_flags;
use crate::util::Summary;

const BULK_MIN_PACKETS: u64 = 4;
const BULK_MAX_GAP_MICROS: u64 = 1_000_000;
const SUBFLOW_GAP_MICROS: u64 = 1_000_000;

fn iats(packets: &[PacketObs]) -> Vec<f64> {
    packets.windows(2).map(|w| (w[1].ts - w[0].ts) as f64).collect()
}

fn lengths(packets: &[PacketObs]) -> impl Iterator<Item = f64> + '_ {
    packets.iter().map(|p| f64::from(p.payload_len))
}

fn count_flag(packets: &[PacketObs], flag: u8) -> f64 {
    packets.iter().filter(|p| p.tcp_flags & flag != 0).count() as f64
}

fn per_second(amount: f64, micros: u64) -> f64 {
    if micros == 0 {
        0.0
    } else {
        amount / (micros as f64 / 1e6)
    }
}

#[derive(Default, Clone, Copy)]
struct Bulk {
    count: u64,
    packets: u64,
    bytes: u64,
    micros: u64,
}

#[derive(Default, Clone, Copy)]
struct BulkCandidate {
    start: u64,
    last: u64,
    packets: u64,
    bytes: u64,
}

impl Bulk {
    fn close(&mut self, c: &mut Option<BulkCandidate>) {
        if let Some(c) = c.take() {
            if c.packets >= BULK_MIN_PACKETS {
                self.count += 1;
                self.packets += c.packets;
                self.bytes += c.bytes;
                self.micros += c.last - c.start;
            }
        }
    }

    fn bytes_per_bulk(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.bytes as f64 / self.count as f64 }
    }

    fn packets_per_bulk(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.packets as f64 / self.count as f64 }
    }

    fn rate(&self) -> f64 {
        per_second(self.bytes as f64, self.micros)
    }
}

/// Runs of at least four data packets in one direction, uninterrupted by data
/// from the other direction and with gaps of at most one second.
fn bulks(ordered: &[(Direction, PacketObs)]) -> (Bulk, Bulk) {
    let (mut fwd, mut bwd) = (Bulk::default(), Bulk::default());
    let (mut fwd_c, mut bwd_c): (Option<BulkCandidate>, Option<BulkCandidate>) = (None, None);
    for (dir, p) in ordered {
        if p.payload_len == 0 {
            continue;
        }
        let (bulk, cand, other_bulk, other_cand) = match dir {
            Direction::Forward => (&mut fwd, &mut fwd_c, &mut bwd, &mut bwd_c),
            Direction::Backward => (&mut bwd, &mut bwd_c, &mut fwd, &mut fwd_c),
        };
        other_bulk.close(other_cand);
        if let Some(c) = cand.as_ref() {
            if p.ts - c.last > BULK_MAX_GAP_MICROS {
                bulk.close(cand);
            }
        }
        let c = cand.get_or_insert(BulkCandidate { start: p.ts, last: p.ts, packets: 0, bytes: 0 });
        c.last = p.ts;
        c.packets += 1;
        c.bytes += u64::from(p.payload_len);
    }
    fwd.close(&mut fwd_c);
    bwd.close(&mut bwd_c);
    (fwd, bwd)
}

/// Active and idle period lengths. An idle period is any inter-packet gap
/// longer than `activity_timeout`; active periods of zero length are dropped.
fn active_idle(ordered: &[(Direction, PacketObs)], activity_timeout: u64) -> (Vec<f64>, Vec<f64>) {
    let (mut active, mut idle) = (Vec::new(), Vec::new());
    let Some((_, first)) = ordered.first() else {
        return (active, idle);
    };
    let mut start = first.ts;
    let mut prev = first.ts;
    for (_, p) in &ordered[1..] {
        let gap = p.ts - prev;
        if gap > activity_timeout {
            if prev > start {
                active.push((prev - start) as f64);
            }
            idle.push(gap as f64);
            start = p.ts;
        }
        prev = p.ts;
    }
    if prev > start {
        active.push((prev - start) as f64);
    }
    (active, idle)
}

pub(crate) struct CicStats<'a> {
    flow: &'a FlowRecord,
    fwd_len: Summary,
    bwd_len: Summary,
    all_len: Summary,
    flow_iat: Summary,
    fwd_iat: Summary,
    bwd_iat: Summary,
    fwd_bulk: Bulk,
    bwd_bulk: Bulk,
    subflows: f64,
    active: Summary,
    idle: Summary,
}

impl<'a> CicStats<'a> {
    pub(crate) fn new(flow: &'a FlowRecord, activity_timeout_micros: u64) -> Self {
        let ordered = flow.packets_in_order();
        let all: Vec<PacketObs> = ordered.iter().map(|(_, p)| *p).collect();
        let (fwd_bulk, bwd_bulk) = bulks(&ordered);
        let (active, idle) = active_idle(&ordered, activity_timeout_micros);
        let subflows = 1 + all.windows(2).filter(|w| w[1].ts - w[0].ts > SUBFLOW_GAP_MICROS).count();
        Self {
            flow,
            fwd_len: Summary::of(lengths(&flow.fwd_packets)),
            bwd_len: Summary::of(lengths(&flow.bwd_packets)),
            all_len: Summary::of(lengths(&all)),
            flow_iat: Summary::of(iats(&all)),
            fwd_iat: Summary::of(iats(&flow.fwd_packets)),
            bwd_iat: Summary::of(iats(&flow.bwd_packets)),
            fwd_bulk,
            bwd_bulk,
            subflows: subflows as f64,
            active: Summary::of(active),
            idle: Summary::of(idle),
        }
    }

    pub(crate) fn identifier(&self, name: &str) -> Option<String> {
        let k = &self.flow.key;
        Some(match name {
            "Flow ID" => format!("{}-{}-{}-{}-{}", k.ip_a, k.ip_b, k.port_a, k.port_b, k.protocol),
            "Src IP" => k.ip_a.to_string(),
            "Src Port" => k.port_a.to_string(),
            "Dst IP" => k.ip_b.to_string(),
            "Dst Port" => k.port_b.to_string(),
            "Timestamp" => self.flow.first_ts.to_string(),
            _ => return None,
        })
    }

    pub(crate) fn value(&self, name: &str) -> Option<f64> {
        let f = self.flow;
        let fwd = &f.fwd_packets;
        let bwd = &f.bwd_packets;
        let duration = f.duration_micros();
        let n_fwd = fwd.len() as f64;
        let n_bwd = bwd.len() as f64;
        let all_flag = |flag| count_flag(fwd, flag) + count_flag(bwd, flag);
        let v = match name {
            "Protocol" => f64::from(f.key.protocol),
            "Flow Duration" => duration as f64,
            "Total Fwd Packet" => n_fwd,
            "Total Bwd packets" => n_bwd,
            "Total Length of Fwd Packet" => self.fwd_len.sum,
            "Total Length of Bwd Packet" => self.bwd_len.sum,
            "Fwd Packet Length Max" => self.fwd_len.max,
            "Fwd Packet Length Min" => self.fwd_len.min,
            "Fwd Packet Length Mean" => self.fwd_len.mean,
            "Fwd Packet Length Std" => self.fwd_len.std,
            "Bwd Packet Length Max" => self.bwd_len.max,
            "Bwd Packet Length Min" => self.bwd_len.min,
            "Bwd Packet Length Mean" => self.bwd_len.mean,
            "Bwd Packet Length Std" => self.bwd_len.std,
            "Flow Bytes/s" => per_second(self.all_len.sum, duration),
            "Flow Packets/s" => per_second(n_fwd + n_bwd, duration),
            "Flow IAT Mean" => self.flow_iat.mean,
            "Flow IAT Std" => self.flow_iat.std,
            "Flow IAT Max" => self.flow_iat.max,
            "Flow IAT Min" => self.flow_iat.min,
            "Fwd IAT Total" => self.fwd_iat.sum,
            "Fwd IAT Mean" => self.fwd_iat.mean,
            "Fwd IAT Std" => self.fwd_iat.std,
            "Fwd IAT Max" => self.fwd_iat.max,
            "Fwd IAT Min" => self.fwd_iat.min,
            "Bwd IAT Total" => self.bwd_iat.sum,
            "Bwd IAT Mean" => self.bwd_iat.mean,
            "Bwd IAT Std" => self.bwd_iat.std,
            "Bwd IAT Max" => self.bwd_iat.max,
            "Bwd IAT Min" => self.bwd_iat.min,
            "Fwd PSH Flags" => count_flag(fwd, tcp_flags::PSH),
            "Bwd PSH Flags" => count_flag(bwd, tcp_flags::PSH),
            "Fwd URG Flags" => count_flag(fwd, tcp_flags::URG),
            "Bwd URG Flags" => count_flag(bwd, tcp_flags::URG),
            "Fwd Header Length" => fwd.iter().map(|p| f64::from(p.header_len)).sum(),
            "Bwd Header Length" => bwd.iter().map(|p| f64::from(p.header_len)).sum(),
            "Fwd Packets/s" => per_second(n_fwd, duration),
            "Bwd Packets/s" => per_second(n_bwd, duration),
            "Packet Length Min" => self.all_len.min,
            "Packet Length Max" => self.all_len.max,
            "Packet Length Mean" => self.all_len.mean,
            "Packet Length Std" => self.all_len.std,
            "Packet Length Variance" => self.all_len.variance(),
            "FIN Flag Count" => all_flag(tcp_flags::FIN),
            "SYN Flag Count" => all_flag(tcp_flags::SYN),
            "RST Flag Count" => all_flag(tcp_flags::RST),
            "PSH Flag Count" => all_flag(tcp_flags::PSH),
            "ACK Flag Count" => all_flag(tcp_flags::ACK),
            "URG Flag Count" => all_flag(tcp_flags::URG),
            "CWR Flag Count" => all_flag(tcp_flags::CWR),
            "ECE Flag Count" => all_flag(tcp_flags::ECE),
            "Down/Up Ratio" => if n_fwd > 0.0 { n_bwd / n_fwd } else { 0.0 },
            "Average Packet Size" => self.all_len.mean,
            "Fwd Segment Size Avg" => self.fwd_len.mean,
            "Bwd Segment Size Avg" => self.bwd_len.mean,
            "Fwd Bytes/Bulk Avg" => self.fwd_bulk.bytes_per_bulk(),
            "Fwd Packet/Bulk Avg" => self.fwd_bulk.packets_per_bulk(),
            "Fwd Bulk Rate Avg" => self.fwd_bulk.rate(),
            "Bwd Bytes/Bulk Avg" => self.bwd_bulk.bytes_per_bulk(),
            "Bwd Packet/Bulk Avg" => self.bwd_bulk.packets_per_bulk(),
            "Bwd Bulk Rate Avg" => self.bwd_bulk.rate(),
            "Subflow Fwd Packets" => n_fwd / self.subflows,
            "Subflow Fwd Bytes" => self.fwd_len.sum / self.subflows,
            "Subflow Bwd Packets" => n_bwd / self.subflows,
            "Subflow Bwd Bytes" => self.bwd_len.sum / self.subflows,
            "FWD Init Win Bytes" => fwd.first().map_or(0.0, |p| f64::from(p.tcp_window)),
            "Bwd Init Win Bytes" => bwd.first().map_or(0.0, |p| f64::from(p.tcp_window)),
            "Fwd Act Data Pkts" => fwd.iter().filter(|p| p.payload_len > 0).count() as f64,
            "Fwd Seg Size Min" => self.fwd_len.min,
            "Active Mean" => self.active.mean,
            "Active Std" => self.active.std,
            "Active Max" => self.active.max,
            "Active Min" => self.active.min,
            "Idle Mean" => self.idle.mean,
            "Idle Std" => self.idle.std,
            "Idle Max" => self.idle.max,
            "Idle Min" => self.idle.min,
            _ => return None,
        };
        Some(v)
    }
}
