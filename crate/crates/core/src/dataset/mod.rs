//! Labelled datasets and the preprocessing protocol: ground-truth labelling,
//! identifier removal, min-max scaling and stratified k-fold splits.

pub mod io;
mod kfold;
mod label;
mod scaler;

pub use kfold::{kfold_split, KFolds};
pub use label::{label_flows, GroundTruthEvent, Labeling};
pub use scaler::MinMaxScaler;

use crate::flow_meter::{FeatureRow, FeatureSchema};
use crate::{Error, Result};

pub const BENIGN: &str = "Benign";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub schema: FeatureSchema,
    pub rows: Vec<FeatureRow>,
    /// 0 benign, 1 attack.
    pub labels: Vec<u8>,
    /// "Benign" or the attack category.
    pub categories: Vec<String>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Checks row widths and that label = 1 exactly when the category is not "Benign".
    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.rows.len() || self.categories.len() != self.rows.len() {
            return Err(Error::InvalidInput("labels, categories and rows differ in length".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.ids.len() != self.schema.identifier_count() || row.values.len() != self.schema.learnable_count() {
                return Err(Error::WidthMismatch {
                    expected: self.schema.width(),
                    got: row.ids.len() + row.values.len(),
                });
            }
            let attack = self.categories[i] != BENIGN;
            if self.labels[i] > 1 || (self.labels[i] == 1) != attack {
                return Err(Error::InvalidInput(format!(
                    "row {i}: label {} inconsistent with category '{}'",
                    self.labels[i], self.categories[i]
                )));
            }
        }
        Ok(())
    }

    /// Learnable values of every row.
    pub fn feature_matrix(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.values.clone()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            categories: indices.iter().map(|&i| self.categories[i].clone()).collect(),
        }
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let attacks = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - attacks, attacks]
    }
}

/// Removes flow id, address, port and timestamp columns; survivors keep their order.
pub fn drop_identifiers(dataset: LabeledDataset) -> LabeledDataset {
    if dataset.schema.identifier_count() == 0 {
        return dataset;
    }
    let schema = dataset.schema.learnable_only();
    let rows = dataset
        .rows
        .into_iter()
        .map(|r| FeatureRow { ids: Vec::new(), values: r.values })
        .collect();
    LabeledDataset { schema, rows, labels: dataset.labels, categories: dataset.categories }
}
