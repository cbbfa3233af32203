use nalgebra::DVector;

use super::Target;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Neal's funnel in two dimensions: `N(x₁; 0, σ²) · N(x₂; 0, e^{x₁})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunnelTarget {
    sigma_sq: f64,
}

impl FunnelTarget {
    pub fn new(sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma_sq",
                reason: format!("must be positive, got {sigma_sq}"),
            });
        }
        Ok(Self { sigma_sq })
    }
}

impl Target for FunnelTarget {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &DVector<f64>) -> f64 {
        let (x1, x2) = (x[0], x[1]);
        -0.5 * (LN_2PI + self.sigma_sq.ln())
            - 0.5 * x1 * x1 / self.sigma_sq
            - 0.5 * LN_2PI
            - 0.5 * x1
            - 0.5 * x2 * x2 * (-x1).exp()
    }

    fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64> {
        let (x1, x2) = (x[0], x[1]);
        let e = (-x1).exp();
        DVector::from_column_slice(&[-x1 / self.sigma_sq - 0.5 + 0.5 * x2 * x2 * e, -x2 * e])
    }
}
