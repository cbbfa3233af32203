//! Tabular datasets: CSV ingestion, seeded train/test split, standardization
//! and small synthetic generators.

use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Name of the response column in dataset CSV files.
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// One row per observation.
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if feature_names.len() != features.ncols() {
            return Err(Error::Data("feature name count does not match columns".into()));
        }
        Ok(Self {
            feature_names,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Reads a comma-separated file with a header row and a `label` column.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
            .clone();
        let label_idx = headers
            .iter()
            .position(|h| h.trim() == LABEL_COLUMN)
            .ok_or_else(|| Error::Data(format!("{}: no `{LABEL_COLUMN}` column", path.display())))?;
        let feature_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(_, h)| h.trim().to_string())
            .collect();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            for (i, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Data(format!(
                        "{}: line {}: column `{}` is not a number: {field:?}",
                        path.display(),
                        row + 2,
                        &headers[i]
                    ))
                })?;
                if i == label_idx {
                    labels.push(v);
                } else {
                    values.push(v);
                }
            }
        }
        if labels.is_empty() {
            return Err(Error::Data(format!("{}: dataset is empty", path.display())));
        }
        let features = DMatrix::from_row_slice(labels.len(), feature_names.len(), &values);
        Self::new(feature_names, features, labels)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref()).map_err(|e| Error::Io(e.to_string()))?;
        let mut header = self.feature_names.clone();
        header.push(LABEL_COLUMN.to_string());
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.features.row(i).iter().map(|v| format!("{v}")).collect();
            row.push(format!("{}", self.labels[i]));
            w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    fn select(&self, rows: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Seeded shuffle, then the first `round(ratio·n)` rows become the training set.
    pub fn train_test_split(&self, ratio: f64, rng: &mut Rng) -> Result<(Self, Self)> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter {
                name: "train_ratio",
                reason: format!("must lie in (0, 1), got {ratio}"),
            });
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(rng);
        let n_train = ((ratio * self.len() as f64).round() as usize).clamp(1, self.len().saturating_sub(1).max(1));
        let (train, test) = idx.split_at(n_train);
        Ok((self.select(train), self.select(test)))
    }

    /// Standardizes `self` and `other` with the column means and standard
    /// deviations of `self`. Constant columns are only centred.
    pub fn standardize_with(&mut self, other: &mut Self) {
        let n = self.len() as f64;
        for j in 0..self.features.ncols() {
            let col = self.features.column(j);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for m in [&mut self.features, &mut other.features] {
                m.column_mut(j).apply(|v| *v = (*v - mean) / sd);
            }
        }
    }

    /// Maps the distinct label values (sorted) onto `0..L`.
    pub fn class_indices(&self, classes: &[f64]) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .map(|y| {
                classes
                    .iter()
                    .position(|c| c == y)
                    .ok_or_else(|| Error::Data(format!("unknown class label {y}")))
            })
            .collect()
    }

    pub fn distinct_labels(&self) -> Vec<f64> {
        let mut v = self.labels.clone();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Linearly separable classification data: standard normal features and
/// labels `argmax_l xᵀw_l` for random true weights (binary: `xᵀw > 0`).
/// Returns `(features, labels, true weights)`.
pub fn synthetic_logistic(
    n: usize,
    p: usize,
    classes: usize,
    rng: &mut Rng,
) -> (DMatrix<f64>, Vec<usize>, DMatrix<f64>) {
    let cols = if classes == 2 { 1 } else { classes };
    let w = DMatrix::from_fn(p, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let logits = &x * &w;
    let labels = (0..n)
        .map(|i| {
            if classes == 2 {
                usize::from(logits[(i, 0)] > 0.0)
            } else {
                logits.row(i).transpose().imax()
            }
        })
        .collect();
    (x, labels, w)
}

/// Smooth nonlinear regression data `y = Σ_j sin(x_j) + noise`, `x ~ N(0, I)`.
pub fn synthetic_regression(n: usize, p: usize, noise_sd: f64, rng: &mut Rng) -> (DMatrix<f64>, Vec<f64>) {
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = (0..n)
        .map(|i| x.row(i).iter().map(|v| v.sin()).sum::<f64>() + noise_sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, SeedStream};

    #[test]
    fn csv_round_trip_and_split() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "a,label,b\n1,0,2\n3,1,4\n5,1,6\n7,0,8\n").unwrap();
        let ds = Dataset::from_csv(&path).unwrap();
        assert_eq!(ds.feature_names, vec!["a", "b"]);
        assert_eq!(ds.labels, vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(ds.features[(2, 1)], 6.0);
        let mut rng = SeedStream::new(0).substream(Purpose::Data, 0, 0);
        let (mut train, mut test) = ds.train_test_split(0.5, &mut rng).unwrap();
        assert_eq!((train.len(), test.len()), (2, 2));
        train.standardize_with(&mut test);
        for j in 0..2 {
            assert!(train.features.column(j).sum().abs() < 1e-12);
        }
        let out = dir.path().join("e.csv");
        ds.write_csv(&out).unwrap();
        let again = Dataset::from_csv(&out).unwrap();
        assert_eq!(again.labels, ds.labels);
        assert_eq!(again.features, ds.features);
    }

    #[test]
    fn csv_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(Dataset::from_csv(&p).is_err());
        std::fs::write(&p, "a,label\nfoo,1\n").unwrap();
        let e = Dataset::from_csv(&p).unwrap_err();
        assert!(format!("{e}").contains("line 2"));
        std::fs::write(&p, "a,label\n").unwrap();
        assert!(Dataset::from_csv(&p).is_err());
    }

    #[test]
    fn synthetic_classes_are_separable() {
        let mut rng = SeedStream::new(1).substream(Purpose::Data, 0, 0);
        let (x, y, w) = synthetic_logistic(50, 3, 2, &mut rng);
        for (i, &label) in y.iter().enumerate() {
            let t = (x.row(i) * &w)[(0, 0)];
            assert_eq!(label, usize::from(t > 0.0));
        }
    }
}
