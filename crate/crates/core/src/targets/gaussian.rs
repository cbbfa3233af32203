use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GaussianMoments, Target};
use crate::error::{Error, Result};
use crate::mixture::{log_sum_exp, FullCovGaussian, IsotropicGaussian};
use crate::rng::Rng;

/// Component covariance: a scalar `ε` (meaning `ε I`) or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Covariance {
    Isotropic(f64),
    Full(Vec<Vec<f64>>),
}

/// Structure of randomly generated target covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    #[default]
    Isotropic,
    Diagonal,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMixtureTargetSpec {
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Covariance>,
    pub weights: Vec<f64>,
}

impl GaussianMixtureTargetSpec {
    pub fn isotropic_gaussian(mean: &[f64], variance: f64) -> Self {
        Self {
            means: vec![mean.to_vec()],
            covariances: vec![Covariance::Isotropic(variance)],
            weights: vec![1.0],
        }
    }

    /// Equal-weight mixture of isotropic atoms.
    pub fn uniform_isotropic(atoms: &[IsotropicGaussian]) -> Self {
        let n = atoms.len() as f64;
        Self {
            means: atoms.iter().map(|a| a.mean().iter().copied().collect()).collect(),
            covariances: atoms.iter().map(|a| Covariance::Isotropic(a.variance())).collect(),
            weights: vec![1.0 / n; atoms.len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Isotropic atoms with their weights, if every covariance is a scalar.
    pub fn isotropic_atoms(&self) -> Option<Vec<(IsotropicGaussian, f64)>> {
        self.means
            .iter()
            .zip(&self.covariances)
            .zip(&self.weights)
            .map(|((m, c), &w)| match c {
                Covariance::Isotropic(e) => IsotropicGaussian::from_slice(m, *e).ok().map(|g| (g, w)),
                Covariance::Full(_) => None,
            })
            .collect()
    }
}

/// Random target in the style of the mixture benchmarks: means uniform in
/// `[−spread, spread]^d`, covariances random SPD scaled by `scale`, raw
/// weights drawn uniformly from `{1, …, 2n}` and normalized.
///
/// Random covariances have unit average eigenvalue before scaling:
/// isotropic `u·I`, diagonal `diag(u_i)` with `u ~ U[0.5, 1.5]`, and full
/// `AAᵀ + I` (Gaussian `A`) rescaled to trace `d`.
pub fn random_mog_spec(
    d: usize,
    spread: f64,
    scale: f64,
    n: usize,
    kind: CovarianceKind,
    rng: &mut Rng,
) -> GaussianMixtureTargetSpec {
    let means = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-spread..=spread)).collect())
        .collect();
    let covariances = (0..n)
        .map(|_| match kind {
            CovarianceKind::Isotropic => Covariance::Isotropic(scale * rng.random_range(0.5..1.5)),
            CovarianceKind::Diagonal => {
                let diag: Vec<f64> = (0..d).map(|_| scale * rng.random_range(0.5..1.5)).collect();
                Covariance::Full(
                    (0..d)
                        .map(|i| (0..d).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
                        .collect(),
                )
            }
            CovarianceKind::Full => {
                let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let mut s = &a * a.transpose() + DMatrix::identity(d, d);
                let trace = s.trace();
                s *= scale * d as f64 / trace;
                let s = (&s + s.transpose()) * 0.5;
                Covariance::Full((0..d).map(|i| s.row(i).iter().copied().collect()).collect())
            }
        })
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1..=2 * n) as f64).collect();
    let total: f64 = raw.iter().sum();
    GaussianMixtureTargetSpec {
        means,
        covariances,
        weights: raw.iter().map(|w| w / total).collect(),
    }
}

#[derive(Debug, Clone)]
enum Component {
    Iso(IsotropicGaussian),
    Full(FullCovGaussian),
}

impl Component {
    fn log_density(&self, x: &DVector<f64>) -> f64 {
        match self {
            Component::Iso(g) => g.log_density_at(x),
            Component::Full(g) => g.log_density_at(x),
        }
    }

    /// `∇ log N(x)`.
    fn score(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Component::Iso(g) => (g.mean() - x) / g.variance(),
            Component::Full(g) => g.precision_times(&(g.mean() - x)),
        }
    }

    fn precision(&self, d: usize) -> DMatrix<f64> {
        match self {
            Component::Iso(g) => DMatrix::identity(d, d) / g.variance(),
            Component::Full(g) => g.cholesky().inverse(),
        }
    }
}

/// Normalized Gaussian-mixture target with exact log density and score.
#[derive(Debug, Clone)]
pub struct GaussianMixtureTarget {
    dim: usize,
    components: Vec<Component>,
    log_weights: Vec<f64>,
    spec: GaussianMixtureTargetSpec,
}

impl GaussianMixtureTarget {
    pub fn new(spec: GaussianMixtureTargetSpec) -> Result<Self> {
        let n = spec.means.len();
        if n == 0 || spec.covariances.len() != n || spec.weights.len() != n {
            return Err(Error::InvalidParameter {
                name: "mixture target",
                reason: format!(
                    "need matching non-empty means/covariances/weights, got {}/{}/{}",
                    n,
                    spec.covariances.len(),
                    spec.weights.len()
                ),
            });
        }
        let d = spec.dim();
        if d == 0 {
            return Err(Error::InvalidParameter {
                name: "means",
                reason: "dimension must be at least 1".into(),
            });
        }
        let total: f64 = spec.weights.iter().sum();
        if spec.weights.iter().any(|w| !(*w > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: format!("must be positive and sum to 1 (sum = {total})"),
            });
        }
        let mut components = Vec::with_capacity(n);
        for (m, c) in spec.means.iter().zip(&spec.covariances) {
            if m.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: m.len(),
                });
            }
            let mean = DVector::from_column_slice(m);
            components.push(match c {
                Covariance::Isotropic(e) => Component::Iso(IsotropicGaussian::new(mean, *e)?),
                Covariance::Full(rows) => {
                    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: rows.len(),
                        });
                    }
                    let cov = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                    Component::Full(FullCovGaussian::new(mean, cov)?)
                }
            });
        }
        Ok(Self {
            dim: d,
            components,
            log_weights: spec.weights.iter().map(|w| w.ln()).collect(),
            spec,
        })
    }

    pub fn isotropic_gaussian(mean: &[f64], variance: f64) -> Result<Self> {
        Self::new(GaussianMixtureTargetSpec::isotropic_gaussian(mean, variance))
    }

    pub fn spec(&self) -> &GaussianMixtureTargetSpec {
        &self.spec
    }

    fn responsibilities(&self, x: &DVector<f64>) -> (f64, Vec<f64>) {
        let mut logs: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| lw + c.log_density(x))
            .collect();
        let lse = log_sum_exp(&logs);
        for l in logs.iter_mut() {
            *l = (*l - lse).exp();
        }
        (lse, logs)
    }
}

impl Target for GaussianMixtureTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &DVector<f64>) -> f64 {
        let logs: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| lw + c.log_density(x))
            .collect();
        log_sum_exp(&logs)
    }

    fn grad_log_density(&self, x: &DVector<f64>) -> DVector<f64> {
        let (_, resp) = self.responsibilities(x);
        let mut g = DVector::zeros(self.dim);
        for (c, r) in self.components.iter().zip(&resp) {
            if *r > 0.0 {
                g.axpy(*r, &c.score(x), 1.0);
            }
        }
        g
    }

    fn gaussian(&self) -> Option<GaussianMoments> {
        if self.components.len() != 1 {
            return None;
        }
        Some(match &self.components[0] {
            Component::Iso(g) => GaussianMoments {
                mean: g.mean().clone(),
                covariance: DMatrix::identity(self.dim, self.dim) * g.variance(),
                isotropic_variance: Some(g.variance()),
            },
            Component::Full(g) => GaussianMoments {
                mean: g.mean().clone(),
                covariance: g.covariance().clone(),
                isotropic_variance: None,
            },
        })
    }

    /// `Σ_k r_k (H_k + g_k g_kᵀ) − s sᵀ` with component scores `g_k`,
    /// component Hessians `H_k = −Σ_k⁻¹` and mixture score `s`.
    fn hessian_log_density(&self, x: &DVector<f64>) -> Option<DMatrix<f64>> {
        let d = self.dim;
        let (_, resp) = self.responsibilities(x);
        let mut h = DMatrix::zeros(d, d);
        let mut s = DVector::zeros(d);
        for (c, r) in self.components.iter().zip(&resp) {
            if *r == 0.0 {
                continue;
            }
            let g = c.score(x);
            h -= c.precision(d) * *r;
            h += &g * g.transpose() * *r;
            s.axpy(*r, &g, 1.0);
        }
        h -= &s * s.transpose();
        Some(h)
    }
}
