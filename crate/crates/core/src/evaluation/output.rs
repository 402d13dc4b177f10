//! Report files. The metrics CSV and JSON lines leave out wall-clock timing so
//! reruns reproduce them byte for byte; timing goes to its own CSV.

use std::io::{Read, Write};

use serde::Serialize;

use super::{ConfusionMatrix, EvaluationReport, FoldResult};
use crate::util::fmt_float;
use crate::{Error, Result};

pub const REPORT_HEADER: [&str; 17] = [
    "dataset", "schema", "model", "fold", "n_train", "n_test", "tp", "fp", "tn", "fn", "accuracy", "f1", "dr", "far",
    "auc", "seed", "config_hash",
];
pub const TIMING_HEADER: [&str; 5] = ["dataset", "schema", "model", "fold", "prediction_time_micros"];

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// One row per fold followed by a `mean` row (count columns left empty).
pub fn write_report_csv<W: Write>(out: W, reports: &[EvaluationReport]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        let head = [r.dataset.clone(), r.schema.clone(), r.model.clone()];
        for f in &r.folds {
            let c = &f.confusion;
            let mut rec: Vec<String> = head.to_vec();
            rec.extend([f.fold, f.n_train, f.n_test, c.tp, c.fp, c.tn, c.fn_].map(|v| v.to_string()));
            rec.extend([f.accuracy, f.f1, f.dr, f.far, f.auc].map(fmt_float));
            rec.extend([r.seed.to_string(), r.config_hash.clone()]);
            w.write_record(&rec)?;
        }
        let m = &r.mean;
        let mut rec: Vec<String> = head.to_vec();
        rec.push("mean".into());
        rec.extend(std::iter::repeat_n(String::new(), 6));
        rec.extend([m.accuracy, m.f1, m.dr, m.far, m.auc].map(fmt_float));
        rec.extend([r.seed.to_string(), r.config_hash.clone()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(out: W, reports: &[EvaluationReport]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(TIMING_HEADER)?;
    for r in reports {
        for f in &r.folds {
            w.write_record([&r.dataset, &r.schema, &r.model, &f.fold.to_string(), &fmt_float(f.prediction_time_micros)])?;
        }
        w.write_record([&r.dataset, &r.schema, &r.model, "mean", &fmt_float(r.mean.prediction_time_micros)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FoldLine<'a> {
    dataset: &'a str,
    schema: &'a str,
    model: &'a str,
    seed: u64,
    config_hash: &'a str,
    fold: usize,
    n_train: usize,
    n_test: usize,
    confusion: &'a ConfusionMatrix,
    accuracy: f64,
    f1: f64,
    dr: f64,
    far: f64,
    auc: f64,
}

/// One JSON object per fold.
pub fn write_report_jsonl<W: Write>(mut out: W, reports: &[EvaluationReport]) -> Result<()> {
    for r in reports {
        for f in &r.folds {
            let line = FoldLine {
                dataset: &r.dataset,
                schema: &r.schema,
                model: &r.model,
                seed: r.seed,
                config_hash: &r.config_hash,
                fold: f.fold,
                n_train: f.n_train,
                n_test: f.n_test,
                confusion: &f.confusion,
                accuracy: f.accuracy,
                f1: f.f1,
                dr: f.dr,
                far: f.far,
                auc: f.auc,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::InvalidInput(format!("bad {what} value '{field}'")))
}

/// Reads a metrics CSV back into reports (timing zero), grouped by
/// (dataset, schema, model) in first-appearance order.
pub fn read_report_csv<R: Read>(input: R) -> Result<Vec<EvaluationReport>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != REPORT_HEADER {
        return Err(Error::InvalidInput("not an evaluation report CSV".into()));
    }
    let mut groups: Vec<(String, String, String, u64, String, Vec<FoldResult>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if &rec[3] == "mean" {
            continue;
        }
        let fold = FoldResult {
            fold: parse(&rec[3], "fold")?,
            n_train: parse(&rec[4], "n_train")?,
            n_test: parse(&rec[5], "n_test")?,
            confusion: ConfusionMatrix {
                tp: parse(&rec[6], "tp")?,
                fp: parse(&rec[7], "fp")?,
                tn: parse(&rec[8], "tn")?,
                fn_: parse(&rec[9], "fn")?,
            },
            accuracy: parse(&rec[10], "accuracy")?,
            f1: parse(&rec[11], "f1")?,
            dr: parse(&rec[12], "dr")?,
            far: parse(&rec[13], "far")?,
            auc: parse(&rec[14], "auc")?,
            prediction_time_micros: 0.0,
        };
        let key = (&rec[0], &rec[1], &rec[2]);
        match groups.iter_mut().find(|g| (g.0.as_str(), g.1.as_str(), g.2.as_str()) == key) {
            Some(g) => g.5.push(fold),
            None => groups.push((
                rec[0].to_string(),
                rec[1].to_string(),
                rec[2].to_string(),
                parse(&rec[15], "seed")?,
                rec[16].to_string(),
                vec![fold],
            )),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(d, s, m, seed, hash, folds)| EvaluationReport::new(&d, &s, &m, seed, &hash, folds))
        .collect())
}

/// Fills per-fold timing from a timing CSV and recomputes the means.
pub fn merge_timing_csv<R: Read>(input: R, reports: &mut [EvaluationReport]) -> Result<()> {
    let mut rdr = csv::Reader::from_reader(input);
    if rdr.headers()?.iter().ne(TIMING_HEADER) {
        return Err(Error::InvalidInput("not a timing CSV".into()));
    }
    for rec in rdr.records() {
        let rec = rec?;
        if &rec[3] == "mean" {
            continue;
        }
        let fold: usize = parse(&rec[3], "fold")?;
        let t: f64 = parse(&rec[4], "prediction_time_micros")?;
        if let Some(r) = reports.iter_mut().find(|r| r.dataset == rec[0] && r.schema == rec[1] && r.model == rec[2]) {
            if let Some(f) = r.folds.iter_mut().find(|f| f.fold == fold) {
                f.prediction_time_micros = t;
            }
        }
    }
    for r in reports.iter_mut() {
        r.mean = super::MetricMeans::of(&r.folds);
    }
    Ok(())
}
