use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::mixture::{log_sum_exp, MixtureState, NEG_HALF_LN_2PI};
use crate::rng::Rng;
use crate::targets::{BnnTarget, LogisticTarget, Target};

pub const DEFAULT_PREDICTIVE_SAMPLES: usize = 100;

/// Likelihood model whose parameters the mixture approximates.
#[derive(Debug, Clone)]
pub enum PredictiveModel {
    Logistic(LogisticTarget),
    Bnn(BnnTarget),
}

impl PredictiveModel {
    pub fn dim(&self) -> usize {
        match self {
            PredictiveModel::Logistic(t) => t.dim(),
            PredictiveModel::Bnn(t) => t.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestLabels {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

/// Held-out data for a Bayesian model.
#[derive(Debug, Clone)]
pub struct PredictiveTask {
    pub model: PredictiveModel,
    /// One row per observation.
    pub features: DMatrix<f64>,
    pub labels: TestLabels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub samples: usize,
    /// Classification only.
    pub accuracy: Option<f64>,
    /// Regression only.
    pub rmse: Option<f64>,
    /// Mean over test points of the log model-averaged predictive density.
    pub log_likelihood: f64,
}

/// Bayesian model averaging over `samples` parameter draws from `state`.
pub fn evaluate_predictive(
    state: &MixtureState,
    task: &PredictiveTask,
    samples: usize,
    rng: &mut Rng,
) -> Result<MetricReport> {
    check_dim(task.model.dim(), state.dim())?;
    if samples == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "need at least one parameter sample".into(),
        });
    }
    let n = task.features.nrows();
    if n == 0 {
        return Err(Error::Data("empty test set".into()));
    }
    let draws = state.sample(samples, rng);
    match (&task.model, &task.labels) {
        (PredictiveModel::Logistic(model), TestLabels::Classes(y)) => {
            check_dim(n, y.len())?;
            Ok(classification(model, &task.features, y, &draws))
        }
        (PredictiveModel::Bnn(model), TestLabels::Values(y)) => {
            check_dim(n, y.len())?;
            Ok(regression(model, &task.features, y, &draws))
        }
        _ => Err(Error::Data("test labels do not match the model kind".into())),
    }
}

fn classification(model: &LogisticTarget, x: &DMatrix<f64>, y: &[usize], draws: &[DVector<f64>]) -> MetricReport {
    let s = draws.len() as f64;
    let (mut correct, mut ll) = (0usize, 0.0);
    for (i, &label) in y.iter().enumerate() {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let mut avg = vec![0.0; model.data().n_classes];
        for z in draws {
            for (a, p) in avg.iter_mut().zip(model.predict_proba(z, &row)) {
                *a += p / s;
            }
        }
        let best = (0..avg.len()).max_by(|&a, &b| avg[a].total_cmp(&avg[b])).unwrap_or(0);
        correct += usize::from(best == label);
        ll += avg[label].max(f64::MIN_POSITIVE).ln();
    }
    MetricReport {
        samples: draws.len(),
        accuracy: Some(correct as f64 / y.len() as f64),
        rmse: None,
        log_likelihood: ll / y.len() as f64,
    }
}

fn regression(model: &BnnTarget, x: &DMatrix<f64>, y: &[f64], draws: &[DVector<f64>]) -> MetricReport {
    let noise_var = model.spec().noise_var;
    let outputs: Vec<Vec<f64>> = draws.iter().map(|z| model.predict(z, x)).collect();
    let log_s = (draws.len() as f64).ln();
    let (mut sse, mut ll) = (0.0, 0.0);
    for (i, yi) in y.iter().enumerate() {
        let mean = outputs.iter().map(|f| f[i]).sum::<f64>() / draws.len() as f64;
        sse += (yi - mean).powi(2);
        let logs: Vec<f64> = outputs
            .iter()
            .map(|f| NEG_HALF_LN_2PI - 0.5 * noise_var.ln() - 0.5 * (yi - f[i]).powi(2) / noise_var)
            .collect();
        ll += log_sum_exp(&logs) - log_s;
    }
    MetricReport {
        samples: draws.len(),
        accuracy: None,
        rmse: Some((sse / y.len() as f64).sqrt()),
        log_likelihood: ll / y.len() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::IsotropicGaussian;
    use crate::rng::{Purpose, SeedStream};
    use crate::targets::data::synthetic_logistic;
    use crate::targets::{BnnRegressionSpec, LogisticRegressionData};
    use rand_distr::{Distribution, StandardNormal};

    fn logistic_task(seed: u64) -> (PredictiveTask, DVector<f64>) {
        let mut rng = SeedStream::new(seed).substream(Purpose::Data, 0, 0);
        let (x, y, w) = synthetic_logistic(200, 5, 2, &mut rng);
        let data = LogisticRegressionData::new(x.clone(), y.clone(), 2, 100.0).unwrap();
        let task = PredictiveTask {
            model: PredictiveModel::Logistic(LogisticTarget::new(data)),
            features: x,
            labels: TestLabels::Classes(y),
        };
        (task, DVector::from_column_slice(w.as_slice()))
    }

    #[test]
    fn true_classifier_is_perfect() {
        let (task, w) = logistic_task(1);
        let state = MixtureState::single(IsotropicGaussian::new(w * 50.0, 1e-10).unwrap());
        let mut rng = SeedStream::new(1).substream(Purpose::Predictive, 0, 0);
        let report = evaluate_predictive(&state, &task, 100, &mut rng).unwrap();
        assert_eq!(report.accuracy, Some(1.0));
        assert!(report.log_likelihood.is_finite() && report.log_likelihood <= 0.0);
    }

    #[test]
    fn concentrated_network_has_tiny_rmse() {
        let mut rng = SeedStream::new(2).substream(Purpose::Data, 0, 0);
        let x = DMatrix::from_fn(50, 3, |_, _| StandardNormal.sample(&mut rng));
        let dummy = BnnRegressionSpec {
            hidden: 4,
            inputs: x.clone(),
            targets: vec![0.0; 50],
            noise_var: 0.01,
            prior_var: 1.0,
        };
        let truth = DVector::from_fn(dummy.param_dim(), |_, _| StandardNormal.sample(&mut rng));
        let model = BnnTarget::new(dummy).unwrap();
        let y = model.predict(&truth, &x);
        let task = PredictiveTask {
            model: PredictiveModel::Bnn(model),
            features: x,
            labels: TestLabels::Values(y),
        };
        let state = MixtureState::single(IsotropicGaussian::new(truth, 1e-11).unwrap());
        let report = evaluate_predictive(&state, &task, 100, &mut rng).unwrap();
        assert!(report.rmse.unwrap() <= 1e-3);
        assert!(report.accuracy.is_none());
    }

    #[test]
    fn sample_count_changes_smoothly() {
        let (task, w) = logistic_task(3);
        let state = MixtureState::from_parts(
            &[w.iter().copied().collect(), w.iter().map(|v| -0.5 * v).collect()],
            &[0.5, 2.0],
        )
        .unwrap();
        for s in [1, 100] {
            let mut rng = SeedStream::new(3).substream(Purpose::Predictive, 0, 0);
            let r = evaluate_predictive(&state, &task, s, &mut rng).unwrap();
            assert_eq!(r.samples, s);
            assert!(r.accuracy.unwrap().is_finite() && r.log_likelihood.is_finite());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let (task, _) = logistic_task(4);
        let state = MixtureState::single(IsotropicGaussian::standard(3));
        let mut rng = SeedStream::new(4).substream(Purpose::Predictive, 0, 0);
        assert!(matches!(
            evaluate_predictive(&state, &task, 10, &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
