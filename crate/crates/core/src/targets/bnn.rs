use nalgebra::{DMatrix, DVector};

use super::Target;
use crate::error::{Error, Result};

/// One-hidden-layer ReLU regression network with Gaussian likelihood and prior.
///
/// Parameters are packed as `[W₁ (h×p, row-major), b₁ (h), w₂ (h), b₂]`,
/// so the dimension is `h(p+1) + (h+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BnnRegressionSpec {
    pub hidden: usize,
    /// One row per observation.
    pub inputs: DMatrix<f64>,
    pub targets: Vec<f64>,
    pub noise_var: f64,
    pub prior_var: f64,
}

impl BnnRegressionSpec {
    pub fn param_dim(&self) -> usize {
        let p = self.inputs.ncols();
        self.hidden * (p + 1) + (self.hidden + 1)
    }
}

/// Posterior over the network weights.
#[derive(Debug, Clone)]
pub struct BnnTarget {
    spec: BnnRegressionSpec,
}

/// Network margin below which a pre-activation counts as "at the kink".
const KINK_MARGIN: f64 = 1e-3;

impl BnnTarget {
    pub fn new(spec: BnnRegressionSpec) -> Result<Self> {
        if spec.hidden == 0 {
            return Err(Error::InvalidParameter {
                name: "hidden",
                reason: "width must be at least 1".into(),
            });
        }
        if spec.inputs.nrows() == 0 || spec.inputs.nrows() != spec.targets.len() {
            return Err(Error::Data(format!(
                "need matching non-empty inputs/targets, got {}/{}",
                spec.inputs.nrows(),
                spec.targets.len()
            )));
        }
        if !(spec.noise_var > 0.0) || !(spec.prior_var > 0.0) {
            return Err(Error::InvalidParameter {
                name: "noise_var/prior_var",
                reason: "variances must be positive".into(),
            });
        }
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &BnnRegressionSpec {
        &self.spec
    }

    fn unpack<'a>(&self, z: &'a DVector<f64>) -> (DMatrix<f64>, &'a [f64], &'a [f64], f64) {
        let (h, p) = (self.spec.hidden, self.spec.inputs.ncols());
        let s = z.as_slice();
        let w1 = DMatrix::from_row_slice(h, p, &s[..h * p]);
        let b1 = &s[h * p..h * p + h];
        let w2 = &s[h * p + h..h * p + 2 * h];
        (w1, b1, w2, s[h * p + 2 * h])
    }

    /// Pre-activations `W₁ xᵀ + b₁` for every row, as an `h × n` matrix.
    fn pre_activations(&self, w1: &DMatrix<f64>, b1: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = w1 * x.transpose();
        for (k, b) in b1.iter().enumerate() {
            a.row_mut(k).add_scalar_mut(*b);
        }
        a
    }

    /// Network output `f(x | z)` for each row of `x`.
    pub fn predict(&self, z: &DVector<f64>, x: &DMatrix<f64>) -> Vec<f64> {
        let (w1, b1, w2, b2) = self.unpack(z);
        let a = self.pre_activations(&w1, b1, x);
        (0..x.nrows())
            .map(|i| b2 + (0..self.spec.hidden).map(|k| w2[k] * a[(k, i)].max(0.0)).sum::<f64>())
            .collect()
    }
}

impl Target for BnnTarget {
    fn dim(&self) -> usize {
        self.spec.param_dim()
    }

    fn log_density(&self, z: &DVector<f64>) -> f64 {
        let f = self.predict(z, &self.spec.inputs);
        let sse: f64 = f.iter().zip(&self.spec.targets).map(|(f, y)| (y - f).powi(2)).sum();
        -0.5 * sse / self.spec.noise_var - 0.5 * z.norm_squared() / self.spec.prior_var
    }

    /// Manual backpropagation; the ReLU derivative at exactly 0 is taken as 0.
    fn grad_log_density(&self, z: &DVector<f64>) -> DVector<f64> {
        let (h, p) = (self.spec.hidden, self.spec.inputs.ncols());
        let x = &self.spec.inputs;
        let (w1, b1, w2, b2) = self.unpack(z);
        let a = self.pre_activations(&w1, b1, x);
        let mut g = DVector::zeros(self.dim());
        for i in 0..x.nrows() {
            let f = b2 + (0..h).map(|k| w2[k] * a[(k, i)].max(0.0)).sum::<f64>();
            let r = (self.spec.targets[i] - f) / self.spec.noise_var;
            for k in 0..h {
                let act = a[(k, i)];
                g[h * p + h + k] += r * act.max(0.0);
                if act > 0.0 {
                    let back = r * w2[k];
                    for j in 0..p {
                        g[k * p + j] += back * x[(i, j)];
                    }
                    g[h * p + k] += back;
                }
            }
            g[h * p + 2 * h] += r;
        }
        g - z / self.spec.prior_var
    }

    fn is_smooth_at(&self, z: &DVector<f64>) -> bool {
        let (w1, b1, _, _) = self.unpack(z);
        self.pre_activations(&w1, b1, &self.spec.inputs)
            .iter()
            .all(|a| a.abs() > KINK_MARGIN)
    }
}
