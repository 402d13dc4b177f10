use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::{LabeledDataset, BENIGN};
use crate::flow_meter::{FeatureTable, FlowSpan};
use crate::{Error, Result};

/// A time-bounded attack record. `None` fields match anything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthEvent {
    pub src_ip: Option<Ipv4Addr>,
    pub dst_ip: Option<Ipv4Addr>,
    pub protocol: Option<u8>,
    pub start_ts: u64,
    pub end_ts: u64,
    pub attack_category: String,
}

impl GroundTruthEvent {
    pub fn validate(&self) -> Result<()> {
        if self.start_ts > self.end_ts {
            return Err(Error::InvalidInput(format!(
                "event '{}' ends before it starts",
                self.attack_category
            )));
        }
        if self.attack_category.is_empty() || self.attack_category == BENIGN {
            return Err(Error::InvalidInput("event category must name an attack".into()));
        }
        Ok(())
    }

    /// Endpoint match in either orientation, protocol match, and overlap of
    /// `[first_ts, last_ts]` with `[start_ts, end_ts]`.
    pub fn matches(&self, flow: &FlowSpan) -> bool {
        let ip = |want: Option<Ipv4Addr>, have: Ipv4Addr| want.is_none_or(|w| w == have);
        let endpoints = (ip(self.src_ip, flow.src_ip) && ip(self.dst_ip, flow.dst_ip))
            || (ip(self.src_ip, flow.dst_ip) && ip(self.dst_ip, flow.src_ip));
        endpoints
            && self.protocol.is_none_or(|p| p == flow.protocol)
            && flow.first_ts <= self.end_ts
            && self.start_ts <= flow.last_ts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub dataset: LabeledDataset,
    /// Flows matched by events of more than one category; the first event won.
    pub conflicts: usize,
}

/// Labels every feature row from the events matching its flow. The first
/// matching event (in `events` order) supplies the category.
pub fn label_flows(table: FeatureTable, spans: &[FlowSpan], events: &[GroundTruthEvent]) -> Result<Labeling> {
    if spans.len() != table.rows.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} flow index entries",
            table.rows.len(),
            spans.len()
        )));
    }
    for e in events {
        e.validate()?;
    }
    let mut labels = Vec::with_capacity(spans.len());
    let mut categories = Vec::with_capacity(spans.len());
    let mut conflicts = 0;
    for span in spans {
        let mut matching = events.iter().filter(|e| e.matches(span));
        match matching.next() {
            Some(first) => {
                if matching.any(|e| e.attack_category != first.attack_category) {
                    conflicts += 1;
                }
                labels.push(1);
                categories.push(first.attack_category.clone());
            }
            None => {
                labels.push(0);
                categories.push(BENIGN.to_string());
            }
        }
    }
    if conflicts > 0 {
        log::warn!("{conflicts} flows matched events of different categories; first match kept");
    }
    let dataset = LabeledDataset { schema: table.schema, rows: table.rows, labels, categories };
    Ok(Labeling { dataset, conflicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_meter::{FeatureRow, FeatureSchema};

    const A: Ipv4Addr = Ipv4Addr::new(10, 0, 0, 1);
    const B: Ipv4Addr = Ipv4Addr::new(10, 0, 0, 2);

    fn span(src: Ipv4Addr, dst: Ipv4Addr, first_s: u64, last_s: u64) -> FlowSpan {
        FlowSpan {
            first_ts: first_s * 1_000_000,
            last_ts: last_s * 1_000_000,
            src_ip: src,
            src_port: 1,
            dst_ip: dst,
            dst_port: 2,
            protocol: 6,
        }
    }

    fn table(n: usize) -> FeatureTable {
        let schema = FeatureSchema::netflow().clone();
        let row = FeatureRow { ids: vec![String::new(); 4], values: vec![0.0; 39] };
        FeatureTable { schema, rows: vec![row; n] }
    }

    fn event(cat: &str, start_s: u64, end_s: u64) -> GroundTruthEvent {
        GroundTruthEvent {
            src_ip: Some(A),
            dst_ip: Some(B),
            protocol: None,
            start_ts: start_s * 1_000_000,
            end_ts: end_s * 1_000_000,
            attack_category: cat.into(),
        }
    }

    #[test]
    fn no_events_means_benign() {
        let out = label_flows(table(2), &[span(A, B, 0, 1), span(B, A, 3, 4)], &[]).unwrap();
        assert_eq!(out.dataset.labels, vec![0, 0]);
        assert!(out.dataset.categories.iter().all(|c| c == BENIGN));
    }

    #[test]
    fn overlap_and_reverse_orientation_match() {
        let spans = [span(A, B, 10, 12), span(B, A, 10, 12), span(A, B, 70, 80)];
        let out = label_flows(table(3), &spans, &[event("DDoS", 0, 60)]).unwrap();
        assert_eq!(out.dataset.labels, vec![1, 1, 0]);
        assert_eq!(out.dataset.categories[0], "DDoS");
        assert!(out.dataset.validate().is_ok());
    }

    #[test]
    fn first_match_wins_and_conflict_is_counted() {
        let events = [event("DoS", 0, 60), event("DDoS", 5, 15), event("DoS", 0, 100)];
        let out = label_flows(table(1), &[span(A, B, 10, 12)], &events).unwrap();
        assert_eq!(out.dataset.categories[0], "DoS");
        assert_eq!(out.conflicts, 1);
    }

    #[test]
    fn wildcards_and_protocol() {
        let mut e = event("Scan", 0, 100);
        e.dst_ip = None;
        e.protocol = Some(17);
        assert!(!e.matches(&span(A, B, 1, 2)));
        e.protocol = None;
        assert!(e.matches(&span(Ipv4Addr::new(1, 2, 3, 4), A, 1, 2)));
    }

    #[test]
    fn invalid_events_are_rejected() {
        assert!(label_flows(table(1), &[span(A, B, 1, 2)], &[event("X", 5, 1)]).is_err());
        assert!(label_flows(table(1), &[span(A, B, 1, 2)], &[event("", 0, 1)]).is_err());
        assert!(label_flows(table(2), &[span(A, B, 1, 2)], &[]).is_err());
    }
}
