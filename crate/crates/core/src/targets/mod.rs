//! Benchmark targets `π ∝ exp(−V)` with analytic gradients.
//!
//! Every target is an unnormalized log density; normalizing constants are
//! never needed by the optimizers. Gaussian and Gaussian-mixture targets
//! also expose exact moments and Hessians, used as test oracles.

mod bnn;
mod check;
pub mod data;
mod funnel;
mod gaussian;
mod logistic;
mod sinh_arcsinh;

use nalgebra::{DMatrix, DVector};

pub use bnn::{BnnRegressionSpec, BnnTarget};
pub use check::{finite_difference_gradient, gradient_mismatch, self_test, GradientCheck};
pub use funnel::FunnelTarget;
pub use gaussian::{random_mog_spec, Covariance, CovarianceKind, GaussianMixtureTarget, GaussianMixtureTargetSpec};
pub use logistic::{LogisticRegressionData, LogisticTarget};
pub use sinh_arcsinh::SinhArcsinhTarget;

/// Exact moments of a Gaussian target.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// `Some(ε)` when the covariance is `ε I`.
    pub isotropic_variance: Option<f64>,
}

/// Unnormalized target density. Inputs must have length [`dim`](Target::dim).
pub trait Target: Send + Sync {
    fn dim(&self) -> usize;

    /// `log π̃(x) = −V(x)` up to an additive constant.
    fn log_density(&self, x: &DVector<f64>) -> f64;

    /// `∇ log π̃(x) = −∇V(x)`.
    fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Exact moments, only for single-Gaussian targets.
    fn gaussian(&self) -> Option<GaussianMoments> {
        None
    }

    /// Analytic Hessian of the log density where available.
    fn hessian_log_density(&self, _x: &DVector<f64>) -> Option<DMatrix<f64>> {
        None
    }

    /// `false` at points where the log density is not differentiable
    /// (or too close to such a point for finite differences).
    fn is_smooth_at(&self, _x: &DVector<f64>) -> bool {
        true
    }
}

impl<T: Target + ?Sized> Target for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &DVector<f64>) -> f64 {
        (**self).log_density(x)
    }
    fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).grad_log_density(x)
    }
    fn gaussian(&self) -> Option<GaussianMoments> {
        (**self).gaussian()
    }
    fn hessian_log_density(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        (**self).hessian_log_density(x)
    }
    fn is_smooth_at(&self, x: &DVector<f64>) -> bool {
        (**self).is_smooth_at(x)
    }
}

/// A target whose log density is shifted by a constant. Gradients are untouched.
#[derive(Debug, Clone)]
pub struct Shifted<T> {
    pub inner: T,
    pub shift: f64,
}

impl<T: Target> Target for Shifted<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, x: &DVector<f64>) -> f64 {
        self.inner.log_density(x) + self.shift
    }
    fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inner.grad_log_density(x)
    }
    fn gaussian(&self) -> Option<GaussianMoments> {
        self.inner.gaussian()
    }
    fn hessian_log_density(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        self.inner.hessian_log_density(x)
    }
    fn is_smooth_at(&self, x: &DVector<f64>) -> bool {
        self.inner.is_smooth_at(x)
    }
}

/// `log(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
