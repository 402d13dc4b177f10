use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::Explanation;
use crate::util::fmt_float;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub mean_abs_shap: f64,
    /// `mean_abs_shap` over the largest one; 0 when every score is 0.
    pub normalized: f64,
    /// 1-based.
    pub rank: usize,
}

/// Every feature, most important first; ties keep column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalRanking {
    pub features: Vec<RankedFeature>,
}

impl GlobalRanking {
    pub fn top_k(&self, k: usize) -> &[RankedFeature] {
        &self.features[..k.min(self.features.len())]
    }

    pub fn position(&self, feature: &str) -> Option<usize> {
        self.features.iter().position(|f| f.feature == feature)
    }
}

/// Mean |φ| per feature across `explanations`, normalised so the top score is 1.
pub fn global_ranking(explanations: &[Explanation], feature_names: &[String]) -> Result<GlobalRanking> {
    if explanations.is_empty() {
        return Err(Error::Empty("explanations"));
    }
    let p = feature_names.len();
    if let Some(e) = explanations.iter().find(|e| e.phi.len() != p) {
        return Err(Error::WidthMismatch { expected: p, got: e.phi.len() });
    }
    let n = explanations.len() as f64;
    let scores: Vec<f64> =
        (0..p).map(|j| explanations.iter().map(|e| e.phi[j].abs()).sum::<f64>() / n).collect();
    let max = scores.iter().copied().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let features = order
        .iter()
        .enumerate()
        .map(|(r, &j)| RankedFeature {
            feature: feature_names[j].clone(),
            mean_abs_shap: scores[j],
            normalized: if max > 0.0 { scores[j] / max } else { 0.0 },
            rank: r + 1,
        })
        .collect();
    Ok(GlobalRanking { features })
}

pub const RANKING_HEADER: [&str; 4] = ["feature", "mean_abs_shap", "normalized", "rank"];

pub fn write_ranking_csv<W: Write>(out: W, ranking: &GlobalRanking) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RANKING_HEADER)?;
    for f in &ranking.features {
        w.write_record([f.feature.clone(), fmt_float(f.mean_abs_shap), fmt_float(f.normalized), f.rank.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ranking_csv<R: Read>(input: R) -> Result<GlobalRanking> {
    let mut rdr = csv::Reader::from_reader(input);
    if rdr.headers()?.iter().ne(RANKING_HEADER) {
        return Err(Error::InvalidInput("not a ranking CSV".into()));
    }
    let mut features = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| Error::InvalidInput(format!("bad number '{}' in ranking", &rec[i])))
        };
        features.push(RankedFeature {
            feature: rec[0].to_string(),
            mean_abs_shap: num(1)?,
            normalized: num(2)?,
            rank: rec[3].parse().map_err(|_| Error::InvalidInput(format!("bad rank '{}'", &rec[3])))?,
        });
    }
    if features.is_empty() {
        return Err(Error::Empty("ranking"));
    }
    Ok(GlobalRanking { features })
}
