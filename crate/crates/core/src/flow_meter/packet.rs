use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

pub const PROTO_ICMP: u8 = 1;
pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;

/// TCP control bits, in header bit order.
pub mod tcp_flags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
    pub const URG: u8 = 0x20;
    pub const ECE: u8 = 0x40;
    pub const CWR: u8 = 0x80;
}

/// One decoded IPv4 packet.
///
/// `tcp_seq`, `icmp_type` and `icmp_code` are carried for retransmission
/// detection and the ICMP feature columns; they are zero when not applicable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub ts_micros: u64,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: u8,
    pub ttl: u8,
    pub ip_total_len: u16,
    pub l4_header_len: u16,
    pub payload_len: u16,
    pub tcp_flags: u8,
    pub tcp_window: u16,
    pub tcp_seq: u32,
    pub icmp_type: u8,
    pub icmp_code: u8,
}

impl PacketRecord {
    /// Length of the IPv4 header implied by the other length fields.
    pub fn ip_header_len(&self) -> u16 {
        self.ip_total_len
            .saturating_sub(self.l4_header_len)
            .saturating_sub(self.payload_len)
    }

    pub fn is_tcp(&self) -> bool {
        self.protocol == PROTO_TCP
    }

    pub fn has_flag(&self, flag: u8) -> bool {
        self.tcp_flags & flag != 0
    }

    /// The same packet with source and destination exchanged.
    pub fn mirrored(&self) -> Self {
        Self {
            src_ip: self.dst_ip,
            dst_ip: self.src_ip,
            src_port: self.dst_port,
            dst_port: self.src_port,
            ..self.clone()
        }
    }
}
