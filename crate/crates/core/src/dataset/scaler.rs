use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-column min-max scaler over learnable values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("training rows"))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for row in rows {
            if row.len() != min.len() {
                return Err(Error::WidthMismatch { expected: min.len(), got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    /// `(x - min) / (max - min)` clipped to `[0, 1]`; constant columns map to 0.
    pub fn transform_into(&self, row: &[f64], out: &mut [f64]) {
        for (j, (o, &v)) in out.iter_mut().zip(row).enumerate() {
            let range = self.max[j] - self.min[j];
            *o = if range > 0.0 { ((v - self.min[j]) / range).clamp(0.0, 1.0) } else { 0.0 };
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.width() {
            return Err(Error::WidthMismatch { expected: self.width(), got: row.len() });
        }
        let mut out = vec![0.0; row.len()];
        self.transform_into(row, &mut out);
        Ok(out)
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn spreads_to_unit_interval() {
        let rows = column(&[2.0, 4.0, 6.0]);
        let s = MinMaxScaler::fit(&rows).unwrap();
        assert_eq!(s.transform(&rows).unwrap(), column(&[0.0, 0.5, 1.0]));
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let rows = column(&[7.0, 7.0]);
        let s = MinMaxScaler::fit(&rows).unwrap();
        assert_eq!(s.transform(&rows).unwrap(), column(&[0.0, 0.0]));
    }

    #[test]
    fn out_of_range_test_values_clip() {
        let s = MinMaxScaler::fit(&column(&[0.0, 5.0])).unwrap();
        assert_eq!(s.transform_row(&[10.0]).unwrap(), vec![1.0]);
        assert_eq!(s.transform_row(&[-3.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(MinMaxScaler::fit(&[]), Err(Error::Empty(_))));
        assert!(MinMaxScaler::fit(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let s = MinMaxScaler::fit(&column(&[0.0, 1.0])).unwrap();
        assert!(s.transform_row(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn refit_with_wider_test_changes_parameters() {
        let train = column(&[0.0, 1.0, 2.0]);
        let test = column(&[5.0]);
        let on_train = MinMaxScaler::fit(&train).unwrap();
        let mut all = train.clone();
        all.extend(test);
        assert_ne!(MinMaxScaler::fit(&all).unwrap(), on_train);
    }

    proptest! {
        #[test]
        fn fit_data_lands_in_unit_interval(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..40)) {
            let s = MinMaxScaler::fit(&rows).unwrap();
            for r in s.transform(&rows).unwrap() {
                prop_assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
