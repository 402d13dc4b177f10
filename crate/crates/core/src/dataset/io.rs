//! CSV reading and writing for feature tables, labelled datasets and
//! ground-truth events.

use std::io::{Read, Write};

use super::{GroundTruthEvent, LabeledDataset};
use crate::flow_meter::{write_rows_csv, FeatureRow, FeatureSchema, FeatureTable};
use crate::{Error, Result};

pub const LABEL_COLUMN: &str = "Label";
pub const ATTACK_COLUMN: &str = "Attack";

/// Writes the feature columns followed by `Label` and `Attack`.
pub fn write_labeled_csv<W: Write>(out: W, ds: &LabeledDataset) -> Result<()> {
    let cells = |i: usize| vec![ds.labels[i].to_string(), ds.categories[i].clone()];
    write_rows_csv(out, &ds.schema, &ds.rows, Some((&[LABEL_COLUMN, ATTACK_COLUMN], &cells)))
}

/// A feature CSV, with labels when the trailing `Label`/`Attack` columns are present.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Unlabeled(FeatureTable),
    Labeled(LabeledDataset),
}

impl Table {
    pub fn schema(&self) -> &FeatureSchema {
        match self {
            Table::Unlabeled(t) => &t.schema,
            Table::Labeled(d) => &d.schema,
        }
    }
}

pub fn read_table<R: Read>(input: R) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let labeled = header.len() >= 2
        && header[header.len() - 2] == LABEL_COLUMN
        && header[header.len() - 1] == ATTACK_COLUMN;
    let n_features = if labeled { header.len() - 2 } else { header.len() };
    let names: Vec<&str> = header[..n_features].iter().map(String::as_str).collect();
    let schema = FeatureSchema::identify(&names)?;
    let n_ids = schema.identifier_count();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut categories = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::InvalidInput(format!("CSV data line {}: {what}", line + 1));
        if rec.len() != header.len() {
            return Err(bad("wrong number of fields"));
        }
        let ids = (0..n_ids).map(|j| rec[j].to_string()).collect();
        let values = (n_ids..n_features)
            .map(|j| rec[j].parse::<f64>().map_err(|_| bad(&format!("'{}' is not a number", &rec[j]))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow { ids, values });
        if labeled {
            labels.push(rec[n_features].parse::<u8>().map_err(|_| bad("label must be 0 or 1"))?);
            categories.push(rec[n_features + 1].to_string());
        }
    }
    if labeled {
        let ds = LabeledDataset { schema, rows, labels, categories };
        ds.validate()?;
        Ok(Table::Labeled(ds))
    } else {
        Ok(Table::Unlabeled(FeatureTable { schema, rows }))
    }
}

pub fn read_labeled<R: Read>(input: R) -> Result<LabeledDataset> {
    match read_table(input)? {
        Table::Labeled(ds) => Ok(ds),
        Table::Unlabeled(_) => Err(Error::InvalidInput("CSV has no Label/Attack columns".into())),
    }
}

pub fn read_ground_truth<R: Read>(input: R) -> Result<Vec<GroundTruthEvent>> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let expected = ["src_ip", "dst_ip", "protocol", "start_ts", "end_ts", "category"];
    if header != expected {
        return Err(Error::InvalidInput(format!(
            "ground truth header must be {}",
            expected.join(",")
        )));
    }
    let mut events = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || Error::InvalidInput(format!("ground truth line {}: malformed", line + 2));
        fn opt<T: std::str::FromStr>(s: &str) -> std::result::Result<Option<T>, ()> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| ())
            }
        }
        let event = GroundTruthEvent {
            src_ip: opt(&rec[0]).map_err(|_| bad())?,
            dst_ip: opt(&rec[1]).map_err(|_| bad())?,
            protocol: opt(&rec[2]).map_err(|_| bad())?,
            start_ts: rec[3].parse().map_err(|_| bad())?,
            end_ts: rec[4].parse().map_err(|_| bad())?,
            attack_category: rec[5].to_string(),
        };
        event.validate()?;
        events.push(event);
    }
    Ok(events)
}

pub fn write_ground_truth<W: Write>(out: W, events: &[GroundTruthEvent]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["src_ip", "dst_ip", "protocol", "start_ts", "end_ts", "category"])?;
    let show = |v: Option<String>| v.unwrap_or_default();
    for e in events {
        w.write_record([
            show(e.src_ip.map(|v| v.to_string())),
            show(e.dst_ip.map(|v| v.to_string())),
            show(e.protocol.map(|v| v.to_string())),
            e.start_ts.to_string(),
            e.end_ts.to_string(),
            e.attack_category.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
