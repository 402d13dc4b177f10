//! Classic libpcap file reading and writing (Ethernet link type, IPv4 only).

use std::net::Ipv4Addr;

use super::packet::{PacketRecord, PROTO_ICMP, PROTO_TCP, PROTO_UDP};
use crate::{Error, Result};

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
const LINKTYPE_ETHERNET: u32 = 1;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const ETH_HEADER_LEN: usize = 14;
const ETHERTYPE_IPV4: u16 = 0x0800;

/// Counters for frames that did not produce a [`PacketRecord`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkipCounters {
    /// Record header or captured bytes run past the end of the file, or the
    /// captured frame is shorter than its headers.
    pub truncated: u64,
    /// ARP, IPv6 and every other non-IPv4 ethertype.
    pub non_ipv4: u64,
    /// IPv4 carrying something other than TCP, UDP or ICMP, or a non-first fragment.
    pub unsupported_protocol: u64,
}

impl SkipCounters {
    pub fn total(&self) -> u64 {
        self.truncated + self.non_ipv4 + self.unsupported_protocol
    }
}

#[derive(Debug, Clone, Default)]
pub struct Capture {
    pub packets: Vec<PacketRecord>,
    pub skipped: SkipCounters,
}

#[derive(Clone, Copy)]
struct Header {
    swapped: bool,
    nanos: bool,
}

impl Header {
    fn u32_at(&self, b: &[u8], at: usize) -> u32 {
        let raw = [b[at], b[at + 1], b[at + 2], b[at + 3]];
        if self.swapped {
            u32::from_be_bytes(raw)
        } else {
            u32::from_le_bytes(raw)
        }
    }
}

fn parse_global_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(Error::Pcap(format!(
            "global header needs {GLOBAL_HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    let le = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let be = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let header = match (le, be) {
        (MAGIC_MICROS, _) => Header { swapped: false, nanos: false },
        (MAGIC_NANOS, _) => Header { swapped: false, nanos: true },
        (_, MAGIC_MICROS) => Header { swapped: true, nanos: false },
        (_, MAGIC_NANOS) => Header { swapped: true, nanos: true },
        _ => return Err(Error::Pcap(format!("unknown magic number {le:#010x}"))),
    };
    let link_type = header.u32_at(bytes, 20);
    if link_type != LINKTYPE_ETHERNET {
        return Err(Error::Pcap(format!(
            "unsupported link type {link_type}, only Ethernet (1) is handled"
        )));
    }
    Ok(header)
}

/// Decodes a pcap byte stream into IPv4 TCP/UDP/ICMP packet records in file order.
pub fn parse_pcap(bytes: &[u8]) -> Result<Capture> {
    let header = parse_global_header(bytes)?;
    let mut capture = Capture::default();
    let mut pos = GLOBAL_HEADER_LEN;
    while pos < bytes.len() {
        if bytes.len() - pos < RECORD_HEADER_LEN {
            capture.skipped.truncated += 1;
            break;
        }
        let ts_sec = header.u32_at(bytes, pos) as u64;
        let ts_frac = header.u32_at(bytes, pos + 4) as u64;
        let incl_len = header.u32_at(bytes, pos + 8) as usize;
        pos += RECORD_HEADER_LEN;
        if bytes.len() - pos < incl_len {
            capture.skipped.truncated += 1;
            break;
        }
        let frame = &bytes[pos..pos + incl_len];
        pos += incl_len;

        let sub_micros = if header.nanos { ts_frac / 1_000 } else { ts_frac };
        let ts_micros = ts_sec * 1_000_000 + sub_micros;
        match decode_frame(frame, ts_micros) {
            Ok(record) => capture.packets.push(record),
            Err(Skip::Truncated) => capture.skipped.truncated += 1,
            Err(Skip::NonIpv4) => capture.skipped.non_ipv4 += 1,
            Err(Skip::Unsupported) => capture.skipped.unsupported_protocol += 1,
        }
    }
    Ok(capture)
}

pub fn read_pcap(path: impl AsRef<std::path::Path>) -> Result<Capture> {
    let bytes = std::fs::read(path)?;
    parse_pcap(&bytes)
}

enum Skip {
    Truncated,
    NonIpv4,
    Unsupported,
}

fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

fn decode_frame(frame: &[u8], ts_micros: u64) -> std::result::Result<PacketRecord, Skip> {
    if frame.len() < ETH_HEADER_LEN {
        return Err(Skip::Truncated);
    }
    if be16(frame, 12) != ETHERTYPE_IPV4 {
        return Err(Skip::NonIpv4);
    }
    let ip = &frame[ETH_HEADER_LEN..];
    if ip.len() < 20 {
        return Err(Skip::Truncated);
    }
    if ip[0] >> 4 != 4 {
        return Err(Skip::NonIpv4);
    }
    let ihl = ((ip[0] & 0x0f) as usize) * 4;
    if ihl < 20 || ip.len() < ihl {
        return Err(Skip::Truncated);
    }
    let total_len = be16(ip, 2);
    let frag_offset = be16(ip, 6) & 0x1fff;
    if frag_offset != 0 {
        return Err(Skip::Unsupported);
    }
    if (total_len as usize) < ihl {
        return Err(Skip::Truncated);
    }
    let ttl = ip[8];
    let protocol = ip[9];
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let l4 = &ip[ihl..];
    let l4_avail = (total_len as usize - ihl).min(l4.len());

    let mut rec = PacketRecord {
        ts_micros,
        src_ip,
        dst_ip,
        src_port: 0,
        dst_port: 0,
        protocol,
        ttl,
        ip_total_len: total_len,
        l4_header_len: 0,
        payload_len: 0,
        tcp_flags: 0,
        tcp_window: 0,
        tcp_seq: 0,
        icmp_type: 0,
        icmp_code: 0,
    };
    let l4_header_len = match protocol {
        PROTO_TCP => {
            if l4_avail < 20 {
                return Err(Skip::Truncated);
            }
            let data_offset = ((l4[12] >> 4) as usize) * 4;
            if data_offset < 20 || l4_avail < data_offset {
                return Err(Skip::Truncated);
            }
            rec.src_port = be16(l4, 0);
            rec.dst_port = be16(l4, 2);
            rec.tcp_seq = u32::from_be_bytes([l4[4], l4[5], l4[6], l4[7]]);
            rec.tcp_flags = l4[13];
            rec.tcp_window = be16(l4, 14);
            data_offset
        }
        PROTO_UDP => {
            if l4_avail < 8 {
                return Err(Skip::Truncated);
            }
            rec.src_port = be16(l4, 0);
            rec.dst_port = be16(l4, 2);
            8
        }
        PROTO_ICMP => {
            if l4_avail < 8 {
                return Err(Skip::Truncated);
            }
            rec.icmp_type = l4[0];
            rec.icmp_code = l4[1];
            8
        }
        _ => return Err(Skip::Unsupported),
    };
    rec.l4_header_len = l4_header_len as u16;
    rec.payload_len = (total_len as usize - ihl - l4_header_len) as u16;
    Ok(rec)
}

fn checksum(chunks: &[&[u8]]) -> u16 {
    let mut sum: u32 = 0;
    let mut carry: Option<u8> = None;
    for chunk in chunks {
        for &byte in *chunk {
            match carry.take() {
                Some(hi) => sum += u32::from(u16::from_be_bytes([hi, byte])),
                None => carry = Some(byte),
            }
        }
    }
    if let Some(hi) = carry {
        sum += u32::from(u16::from_be_bytes([hi, 0]));
    }
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// Serialises a packet record as an Ethernet II frame with a zero-filled payload.
///
/// The IPv4 header length is `ip_total_len - l4_header_len - payload_len`,
/// so it must come out as a multiple of four between 20 and 60 bytes.
pub fn encode_frame(p: &PacketRecord) -> Result<Vec<u8>> {
    let ihl = p.ip_header_len() as usize;
    let l4_len = p.l4_header_len as usize;
    if !(20..=60).contains(&ihl) || !ihl.is_multiple_of(4) {
        return Err(Error::InvalidInput(format!("cannot encode IPv4 header of {ihl} bytes")));
    }
    if (p.ip_total_len as usize) < ihl + l4_len + p.payload_len as usize {
        return Err(Error::InvalidInput("lengths exceed ip_total_len".into()));
    }
    let mut l4 = vec![0u8; l4_len];
    match p.protocol {
        PROTO_TCP => {
            if !(20..=60).contains(&l4_len) || !l4_len.is_multiple_of(4) {
                return Err(Error::InvalidInput(format!("bad TCP header length {l4_len}")));
            }
            l4[0..2].copy_from_slice(&p.src_port.to_be_bytes());
            l4[2..4].copy_from_slice(&p.dst_port.to_be_bytes());
            l4[4..8].copy_from_slice(&p.tcp_seq.to_be_bytes());
            l4[12] = ((l4_len / 4) as u8) << 4;
            l4[13] = p.tcp_flags;
            l4[14..16].copy_from_slice(&p.tcp_window.to_be_bytes());
            // NOP-padded options
            for b in &mut l4[20..] {
                *b = 1;
            }
        }
        PROTO_UDP => {
            if l4_len != 8 {
                return Err(Error::InvalidInput(format!("bad UDP header length {l4_len}")));
            }
            l4[0..2].copy_from_slice(&p.src_port.to_be_bytes());
            l4[2..4].copy_from_slice(&p.dst_port.to_be_bytes());
            l4[4..6].copy_from_slice(&(8 + p.payload_len).to_be_bytes());
        }
        PROTO_ICMP => {
            if l4_len != 8 {
                return Err(Error::InvalidInput(format!("bad ICMP header length {l4_len}")));
            }
            l4[0] = p.icmp_type;
            l4[1] = p.icmp_code;
        }
        other => {
            return Err(Error::InvalidInput(format!("cannot encode IP protocol {other}")));
        }
    }
    let payload = vec![0u8; p.payload_len as usize];

    if matches!(p.protocol, PROTO_TCP | PROTO_UDP) {
        let seg_len = (l4_len + payload.len()) as u16;
        let mut pseudo = Vec::with_capacity(12);
        pseudo.extend_from_slice(&p.src_ip.octets());
        pseudo.extend_from_slice(&p.dst_ip.octets());
        pseudo.extend_from_slice(&[0, p.protocol]);
        pseudo.extend_from_slice(&seg_len.to_be_bytes());
        let at = if p.protocol == PROTO_TCP { 16 } else { 6 };
        let sum = checksum(&[&pseudo, &l4, &payload]);
        l4[at..at + 2].copy_from_slice(&sum.to_be_bytes());
    } else {
        let sum = checksum(&[&l4, &payload]);
        l4[2..4].copy_from_slice(&sum.to_be_bytes());
    }

    let mut ip = vec![0u8; ihl];
    ip[0] = 0x40 | (ihl / 4) as u8;
    ip[2..4].copy_from_slice(&p.ip_total_len.to_be_bytes());
    ip[6] = 0x40; // don't fragment
    ip[8] = p.ttl;
    ip[9] = p.protocol;
    ip[12..16].copy_from_slice(&p.src_ip.octets());
    ip[16..20].copy_from_slice(&p.dst_ip.octets());
    let sum = checksum(&[&ip]);
    ip[10..12].copy_from_slice(&sum.to_be_bytes());

    let mut frame = Vec::with_capacity(ETH_HEADER_LEN + p.ip_total_len as usize);
    frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02]);
    frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]);
    frame.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());
    frame.extend_from_slice(&ip);
    frame.extend_from_slice(&l4);
    frame.extend_from_slice(&payload);
    // trailing bytes between the IP payload and ip_total_len
    frame.resize(ETH_HEADER_LEN + p.ip_total_len as usize, 0);
    Ok(frame)
}

/// Incremental writer for microsecond-resolution little-endian pcap files.
pub struct PcapWriter<W: std::io::Write> {
    out: W,
}

impl<W: std::io::Write> PcapWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        let mut header = Vec::with_capacity(GLOBAL_HEADER_LEN);
        header.extend_from_slice(&MAGIC_MICROS.to_le_bytes());
        header.extend_from_slice(&2u16.to_le_bytes());
        header.extend_from_slice(&4u16.to_le_bytes());
        header.extend_from_slice(&0i32.to_le_bytes());
        header.extend_from_slice(&0u32.to_le_bytes());
        header.extend_from_slice(&65_535u32.to_le_bytes());
        header.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());
        out.write_all(&header)?;
        Ok(Self { out })
    }

    /// Appends a raw frame.
    pub fn write_frame(&mut self, ts_micros: u64, frame: &[u8]) -> Result<()> {
        let sec = (ts_micros / 1_000_000) as u32;
        let usec = (ts_micros % 1_000_000) as u32;
        let len = frame.len() as u32;
        for word in [sec, usec, len, len] {
            self.out.write_all(&word.to_le_bytes())?;
        }
        self.out.write_all(frame)?;
        Ok(())
    }

    pub fn write_packet(&mut self, p: &PacketRecord) -> Result<()> {
        let frame = encode_frame(p)?;
        self.write_frame(p.ts_micros, &frame)
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Encodes a whole capture into pcap bytes.
pub fn write_pcap(packets: &[PacketRecord]) -> Result<Vec<u8>> {
    let mut w = PcapWriter::new(Vec::new())?;
    for p in packets {
        w.write_packet(p)?;
    }
    w.finish()
}
