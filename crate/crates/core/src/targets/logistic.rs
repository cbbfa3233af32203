use nalgebra::{DMatrix, DVector};

use super::{sigmoid, softplus, Target};
use crate::error::{Error, Result};
use crate::mixture::log_sum_exp;

/// Labelled design matrix for Bayesian logistic regression with prior `N(0, σ²_prior I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegressionData {
    /// One row per observation.
    pub features: DMatrix<f64>,
    /// Class index in `0..n_classes`.
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub prior_var: f64,
}

impl LogisticRegressionData {
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>, n_classes: usize, prior_var: f64) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::Data("logistic regression needs a non-empty dataset".into()));
        }
        if labels.len() != features.nrows() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                got: labels.len(),
            });
        }
        if n_classes < 2 {
            return Err(Error::Data(format!("need at least 2 classes, got {n_classes}")));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::Data(format!("label {bad} out of range 0..{n_classes}")));
        }
        if !(prior_var > 0.0) {
            return Err(Error::InvalidParameter {
                name: "prior_var",
                reason: format!("must be positive, got {prior_var}"),
            });
        }
        Ok(Self {
            features,
            labels,
            n_classes,
            prior_var,
        })
    }
}

/// Posterior `π(z | D)` of (multiclass) logistic regression.
///
/// Binary problems use one weight vector and the sigmoid likelihood; with
/// `L > 2` classes the parameter is the class-major flattening of a
/// `p × L` weight matrix and the likelihood is a softmax.
#[derive(Debug, Clone)]
pub struct LogisticTarget {
    data: LogisticRegressionData,
}

impl LogisticTarget {
    pub fn new(data: LogisticRegressionData) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &LogisticRegressionData {
        &self.data
    }

    pub fn n_features(&self) -> usize {
        self.data.features.ncols()
    }

    fn binary(&self) -> bool {
        self.data.n_classes == 2
    }

    fn weights(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let p = self.n_features();
        let cols = if self.binary() { 1 } else { self.data.n_classes };
        DMatrix::from_column_slice(p, cols, z.as_slice())
    }

    /// Class probabilities for one feature row under parameters `z`.
    pub fn predict_proba(&self, z: &DVector<f64>, x: &[f64]) -> Vec<f64> {
        let w = self.weights(z);
        let x = DVector::from_column_slice(x);
        let logits = w.transpose() * x;
        if self.binary() {
            let p1 = sigmoid(logits[0]);
            vec![1.0 - p1, p1]
        } else {
            let lse = log_sum_exp(logits.as_slice());
            logits.iter().map(|l| (l - lse).exp()).collect()
        }
    }
}

impl Target for LogisticTarget {
    fn dim(&self) -> usize {
        let p = self.n_features();
        if self.binary() {
            p
        } else {
            p * self.data.n_classes
        }
    }

    fn log_density(&self, z: &DVector<f64>) -> f64 {
        let logits = &self.data.features * self.weights(z);
        let prior = -0.5 * z.norm_squared() / self.data.prior_var;
        let lik: f64 = if self.binary() {
            self.data
                .labels
                .iter()
                .zip(logits.column(0).iter())
                .map(|(&y, &t)| y as f64 * t - softplus(t))
                .sum()
        } else {
            self.data
                .labels
                .iter()
                .enumerate()
                .map(|(i, &y)| {
                    let row: Vec<f64> = logits.row(i).iter().copied().collect();
                    row[y] - log_sum_exp(&row)
                })
                .sum()
        };
        lik + prior
    }

    fn grad_log_density(&self, z: &DVector<f64>) -> DVector<f64> {
        let x = &self.data.features;
        let logits = x * self.weights(z);
        let mut residual = DMatrix::zeros(logits.nrows(), logits.ncols());
        if self.binary() {
            for (i, &y) in self.data.labels.iter().enumerate() {
                residual[(i, 0)] = y as f64 - sigmoid(logits[(i, 0)]);
            }
        } else {
            for (i, &y) in self.data.labels.iter().enumerate() {
                let row: Vec<f64> = logits.row(i).iter().copied().collect();
                let lse = log_sum_exp(&row);
                for (l, v) in row.iter().enumerate() {
                    let onehot = if l == y { 1.0 } else { 0.0 };
                    residual[(i, l)] = onehot - (v - lse).exp();
                }
            }
        }
        let g = x.transpose() * residual;
        DVector::from_column_slice(g.as_slice()) - z / self.data.prior_var
    }
}
