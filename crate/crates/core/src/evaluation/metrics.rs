use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Decision threshold on the attack probability.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    /// Counts predictions `score >= THRESHOLD` against 0/1 labels.
    pub fn from_scores(labels: &[u8], scores: &[f64]) -> Result<Self> {
        if labels.len() != scores.len() {
            return Err(Error::InvalidInput(format!("{} labels but {} scores", labels.len(), scores.len())));
        }
        let mut cm = ConfusionMatrix::default();
        for (&l, &s) in labels.iter().zip(scores) {
            match (l == 1, s >= THRESHOLD) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fn_ += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub dr: f64,
    pub far: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, F1, detection rate and false-alarm rate. A zero denominator gives 0.
pub fn binary_metrics(cm: &ConfusionMatrix) -> BinaryMetrics {
    BinaryMetrics {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        f1: ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_),
        dr: ratio(cm.tp, cm.tp + cm.fn_),
        far: ratio(cm.fp, cm.fp + cm.tn),
    }
}

/// Area under the ROC curve as the Mann-Whitney statistic, ties counting half.
///
/// Ranks are kept doubled so the sum stays an exact integer.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::InvalidInput(format!("{} labels but {} scores", labels.len(), scores.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based positions i+1..=j+1 share the doubled rank (i+1)+(j+1)
        let rank2 = (i + j + 2) as u128;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u128;
        pos_rank_sum2 += rank2 * pos_in_group;
        i = j + 1;
    }
    let u2 = pos_rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}
