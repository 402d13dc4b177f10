use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{binary_metrics, roc_auc, ConfusionMatrix};
use crate::dataset::{kfold_split, LabeledDataset, MinMaxScaler};
use crate::models::{ModelSpec, Predictor, ScaledModel, TrainedModel};
use crate::util::mix_seed;
use crate::{Error, Result};

/// Median per-sample wall-clock time, in microseconds, of single-row
/// `predict` calls over `rows`, taken over `repeats` passes.
pub fn measure_prediction_time<M: Predictor + ?Sized>(model: &M, rows: &[Vec<f64>], repeats: usize) -> Result<f64> {
    if repeats == 0 {
        return Err(Error::InvalidParam("timing needs at least one repeat".into()));
    }
    if rows.is_empty() {
        return Err(Error::Empty("timing rows"));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != model.n_features()) {
        return Err(Error::WidthMismatch { expected: model.n_features(), got: r.len() });
    }
    let mut per_sample: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            for row in rows {
                std::hint::black_box(model.predict(std::hint::black_box(row)));
            }
            start.elapsed().as_secs_f64() * 1e6 / rows.len() as f64
        })
        .collect();
    per_sample.sort_by(f64::total_cmp);
    let mid = per_sample.len() / 2;
    let median = if per_sample.len() % 2 == 1 { per_sample[mid] } else { 0.5 * (per_sample[mid - 1] + per_sample[mid]) };
    // a clock too coarse to see the loop still must not report zero
    Ok(median.max(1e-3))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalOptions {
    pub k: usize,
    pub seed: u64,
    /// Test rows per fold fed to the timing loop (the first ones of the fold).
    pub timing_rows: usize,
    pub timing_repeats: usize,
}

impl Default for CrossvalOptions {
    fn default() -> Self {
        Self { k: 5, seed: 0, timing_rows: 500, timing_repeats: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub f1: f64,
    pub dr: f64,
    pub far: f64,
    pub auc: f64,
    /// Microseconds per sample; wall-clock, so not reproducible.
    pub prediction_time_micros: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub accuracy: f64,
    pub f1: f64,
    pub dr: f64,
    pub far: f64,
    pub auc: f64,
    pub prediction_time_micros: f64,
}

impl MetricMeans {
    pub fn of(folds: &[FoldResult]) -> Self {
        let n = folds.len().max(1) as f64;
        let mean = |f: fn(&FoldResult) -> f64| folds.iter().map(f).sum::<f64>() / n;
        Self {
            accuracy: mean(|r| r.accuracy),
            f1: mean(|r| r.f1),
            dr: mean(|r| r.dr),
            far: mean(|r| r.far),
            auc: mean(|r| r.auc),
            prediction_time_micros: mean(|r| r.prediction_time_micros),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub schema: String,
    pub model: String,
    pub seed: u64,
    pub k: usize,
    pub config_hash: String,
    pub folds: Vec<FoldResult>,
    pub mean: MetricMeans,
}

impl EvaluationReport {
    /// Builds a report from fold results, computing the means.
    pub fn new(dataset: &str, schema: &str, model: &str, seed: u64, config_hash: &str, folds: Vec<FoldResult>) -> Self {
        Self {
            dataset: dataset.to_string(),
            schema: schema.to_string(),
            model: model.to_string(),
            seed,
            k: folds.len(),
            config_hash: config_hash.to_string(),
            mean: MetricMeans::of(&folds),
            folds,
        }
    }
}

/// Scores every row of `test` with `model` (already scaled inputs).
pub fn score_rows<M: Predictor + ?Sized>(model: &M, rows: &[Vec<f64>]) -> Vec<f64> {
    rows.par_iter().map(|r| model.predict(r)).collect()
}

/// Metrics of one model on one labelled test set; timing left at 0.
pub fn evaluate_scores(fold: usize, n_train: usize, labels: &[u8], scores: &[f64]) -> Result<FoldResult> {
    let confusion = ConfusionMatrix::from_scores(labels, scores)?;
    let m = binary_metrics(&confusion);
    let auc = roc_auc(labels, scores)?;
    Ok(FoldResult {
        fold,
        n_train,
        n_test: labels.len(),
        confusion,
        accuracy: m.accuracy,
        f1: m.f1,
        dr: m.dr,
        far: m.far,
        auc,
        prediction_time_micros: 0.0,
    })
}

/// Stratified k-fold evaluation. Each fold fits its own scaler on the training
/// part and trains with a seed derived from `opts.seed` and the fold index.
/// Folds train in parallel; timing then runs one fold at a time.
pub fn crossval_evaluate(
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    opts: &CrossvalOptions,
    dataset_name: &str,
    config_hash: &str,
) -> Result<EvaluationReport> {
    dataset.validate()?;
    let x = dataset.feature_matrix();
    let folds = kfold_split(&dataset.labels, opts.k, opts.seed)?;
    let trained: Vec<(FoldResult, MinMaxScaler, TrainedModel)> = folds
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, (train_idx, test_idx))| {
            run_fold(&x, &dataset.labels, train_idx, test_idx, spec.with_seed(mix_seed(opts.seed, i as u64)), i)
                .map_err(|e| Error::Fold { fold: i, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(trained.len());
    for ((mut result, scaler, model), (_, test_idx)) in trained.into_iter().zip(&folds.folds) {
        let rows: Vec<Vec<f64>> = test_idx.iter().take(opts.timing_rows.max(1)).map(|&i| x[i].clone()).collect();
        let pipeline = ScaledModel { scaler: &scaler, model: &model };
        result.prediction_time_micros = measure_prediction_time(&pipeline, &rows, opts.timing_repeats)?;
        results.push(result);
    }
    Ok(EvaluationReport::new(
        dataset_name,
        dataset.schema.name.as_str(),
        spec.kind().as_str(),
        opts.seed,
        config_hash,
        results,
    ))
}

fn run_fold(
    x: &[Vec<f64>],
    y: &[u8],
    train_idx: &[usize],
    test_idx: &[usize],
    spec: ModelSpec,
    fold: usize,
) -> Result<(FoldResult, MinMaxScaler, TrainedModel)> {
    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
    let train_y: Vec<u8> = train_idx.iter().map(|&i| y[i]).collect();
    let scaler = MinMaxScaler::fit(&train_x)?;
    let train_x = scaler.transform(&train_x)?;
    let model = spec.train(&train_x, &train_y)?;
    let test_x: Vec<Vec<f64>> = test_idx.iter().map(|&i| scaler.transform_row(&x[i])).collect::<Result<_>>()?;
    let test_y: Vec<u8> = test_idx.iter().map(|&i| y[i]).collect();
    let scores = score_rows(&model, &test_x);
    let result = evaluate_scores(fold, train_idx.len(), &test_y, &scores)?;
    Ok((result, scaler, model))
}
