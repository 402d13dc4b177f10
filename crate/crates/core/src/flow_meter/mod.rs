//! Packet capture decoding, flow assembly and per-flow feature computation.

mod cic;
pub mod flow;
mod netflow;
pub mod packet;
pub mod pcap;
pub mod schema;

use std::io::Write;
use std::net::Ipv4Addr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use flow::{assemble_flows, Direction, ExpiryReason, FlowKey, FlowRecord, FlowTimeouts, PacketObs};
pub use netflow::l7_proto_for_ports;
pub use packet::{tcp_flags, PacketRecord, PROTO_ICMP, PROTO_TCP, PROTO_UDP};
pub use pcap::{parse_pcap, read_pcap, write_pcap, Capture, PcapWriter, SkipCounters};
pub use schema::{Column, ColumnKind, FeatureSchema, SchemaName};

use crate::util::fmt_float;
use crate::{Error, Result};

/// Flow meter settings; all durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowMeterConfig {
    pub timeouts: FlowTimeouts,
    /// Gap above which CIC-style statistics start a new idle period.
    pub activity_timeout: f64,
}

impl Default for FlowMeterConfig {
    fn default() -> Self {
        Self { timeouts: FlowTimeouts::default(), activity_timeout: 5.0 }
    }
}

/// One flow under a schema: identifier cells (as text) followed by learnable
/// values, both in schema column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub ids: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub schema: FeatureSchema,
    pub rows: Vec<FeatureRow>,
}

/// Endpoints and time bounds of a flow, as needed for ground-truth labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSpan {
    pub first_ts: u64,
    pub last_ts: u64,
    pub src_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_ip: Ipv4Addr,
    pub dst_port: u16,
    pub protocol: u8,
}

impl From<&FlowRecord> for FlowSpan {
    fn from(f: &FlowRecord) -> Self {
        Self {
            first_ts: f.first_ts,
            last_ts: f.last_ts,
            src_ip: f.key.ip_a,
            src_port: f.key.port_a,
            dst_ip: f.key.ip_b,
            dst_port: f.key.port_b,
            protocol: f.key.protocol,
        }
    }
}

enum Stats<'a> {
    Netflow(netflow::NetflowStats<'a>),
    Cic(cic::CicStats<'a>),
}

impl Stats<'_> {
    fn identifier(&self, name: &str) -> Option<String> {
        match self {
            Stats::Netflow(s) => s.identifier(name),
            Stats::Cic(s) => s.identifier(name),
        }
    }

    fn value(&self, name: &str) -> Option<f64> {
        match self {
            Stats::Netflow(s) => s.value(name),
            Stats::Cic(s) => s.value(name),
        }
    }
}

/// Computes the feature row of `flow` for any schema whose columns are known
/// to the schema family's feature set.
pub fn compute_features(
    schema: &FeatureSchema,
    flow: &FlowRecord,
    config: &FlowMeterConfig,
) -> Result<FeatureRow> {
    if flow.fwd_packets.is_empty() {
        return Err(Error::InvalidInput("flow has no forward packet".into()));
    }
    let stats = match schema.name {
        SchemaName::NetflowV2Style => Stats::Netflow(netflow::NetflowStats::new(flow)),
        SchemaName::CicStyle => {
            let timeout = (config.activity_timeout * 1e6).round() as u64;
            Stats::Cic(cic::CicStats::new(flow, timeout))
        }
    };
    let unknown = |n: &str| Error::Schema(format!("no feature named '{n}' in {}", schema.name));
    let ids = schema
        .identifier_names()
        .map(|n| stats.identifier(n).ok_or_else(|| unknown(n)))
        .collect::<Result<Vec<_>>>()?;
    let values = schema
        .learnable_names()
        .map(|n| stats.value(n).ok_or_else(|| unknown(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureRow { ids, values })
}

pub fn compute_netflow_features(flow: &FlowRecord) -> FeatureRow {
    compute_features(FeatureSchema::netflow(), flow, &FlowMeterConfig::default())
        .expect("bundled netflow schema is fully computable")
}

pub fn compute_cic_features(flow: &FlowRecord, activity_timeout: f64) -> FeatureRow {
    let config = FlowMeterConfig { activity_timeout, ..FlowMeterConfig::default() };
    compute_features(FeatureSchema::cic(), flow, &config).expect("bundled cic schema is fully computable")
}

/// Flow assembly followed by parallel feature computation. Row order follows
/// flow start time.
pub fn extract(
    packets: &[PacketRecord],
    schema: &FeatureSchema,
    config: &FlowMeterConfig,
) -> Result<(FeatureTable, Vec<FlowSpan>)> {
    let flows = assemble_flows(packets, config.timeouts);
    let rows = flows
        .par_iter()
        .map(|f| compute_features(schema, f, config))
        .collect::<Result<Vec<_>>>()?;
    let spans = flows.iter().map(FlowSpan::from).collect();
    Ok((FeatureTable { schema: schema.clone(), rows }, spans))
}

/// Writes the header and rows as CSV. `extra` appends trailing columns
/// (header names, then per-row cells).
pub fn write_rows_csv<W: Write>(
    out: W,
    schema: &FeatureSchema,
    rows: &[FeatureRow],
    extra: Option<(&[&str], &dyn Fn(usize) -> Vec<String>)>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<&str> = schema.column_names().collect();
    if let Some((names, _)) = &extra {
        header.extend_from_slice(names);
    }
    w.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for (i, row) in rows.iter().enumerate() {
        if row.ids.len() + row.values.len() != schema.width() {
            return Err(Error::WidthMismatch {
                expected: schema.width(),
                got: row.ids.len() + row.values.len(),
            });
        }
        record.clear();
        record.extend(row.ids.iter().cloned());
        record.extend(row.values.iter().map(|v| fmt_float(*v)));
        if let Some((_, cells)) = &extra {
            record.extend(cells(i));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

impl FeatureTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows_csv(out, &self.schema, &self.rows, None)
    }
}

/// Flow index sidecar: one line per feature row with the flow's endpoints and
/// time bounds.
pub fn write_flow_index<W: Write>(out: W, spans: &[FlowSpan]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["first_ts", "last_ts", "src_ip", "src_port", "dst_ip", "dst_port", "protocol"])?;
    for s in spans {
        w.write_record([
            s.first_ts.to_string(),
            s.last_ts.to_string(),
            s.src_ip.to_string(),
            s.src_port.to_string(),
            s.dst_ip.to_string(),
            s.dst_port.to_string(),
            s.protocol.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_flow_index<R: std::io::Read>(input: R) -> Result<Vec<FlowSpan>> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let mut spans = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let bad = || Error::InvalidInput(format!("flow index line {}: malformed", i + 2));
        spans.push(FlowSpan {
            first_ts: field(0).parse().map_err(|_| bad())?,
            last_ts: field(1).parse().map_err(|_| bad())?,
            src_ip: field(2).parse().map_err(|_| bad())?,
            src_port: field(3).parse().map_err(|_| bad())?,
            dst_ip: field(4).parse().map_err(|_| bad())?,
            dst_port: field(5).parse().map_err(|_| bad())?,
            protocol: field(6).parse().map_err(|_| bad())?,
        });
    }
    Ok(spans)
}

#[cfg(test)]
mod tests;
