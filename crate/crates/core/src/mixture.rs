//! Mixture state and exact mixture density evaluation.
//!
//! A [`MixtureState`] is a uniform-weight mixture of isotropic Gaussians
//! `(1/N) Σ_j N(m_j, ε_j I_d)`. All evaluations go through log-sum-exp so
//! well separated components never underflow.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::Rng;

/// Constructors reject variances at or below this value.
pub const VARIANCE_FLOOR: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub(crate) fn standard_normal_vector(d: usize, rng: &mut Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Numerically stable `log Σ exp(v_i)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// One component `N(mean, variance · I_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicGaussian {
    mean: DVector<f64>,
    variance: f64,
}

impl IsotropicGaussian {
    pub fn new(mean: DVector<f64>, variance: f64) -> Result<Self> {
        if !(variance > VARIANCE_FLOOR) || !variance.is_finite() {
            return Err(Error::InvalidParameter {
                name: "variance",
                reason: format!("must be finite and > {VARIANCE_FLOOR:e}, got {variance:e}"),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mean",
                reason: "entries must be finite".into(),
            });
        }
        Ok(Self { mean, variance })
    }

    pub fn from_slice(mean: &[f64], variance: f64) -> Result<Self> {
        Self::new(DVector::from_column_slice(mean), variance)
    }

    pub fn standard(d: usize) -> Self {
        Self {
            mean: DVector::zeros(d),
            variance: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Log density of this component at `x` (unchecked dimension).
    pub(crate) fn log_density_at(&self, x: &DVector<f64>) -> f64 {
        let d = self.dim() as f64;
        let sq = (x - &self.mean).norm_squared();
        -0.5 * d * (LN_2PI + self.variance.ln()) - 0.5 * sq / self.variance
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.log_density_at(x))
    }

    pub fn sample(&self, rng: &mut Rng) -> DVector<f64> {
        let z = standard_normal_vector(self.dim(), rng);
        &self.mean + z * self.variance.sqrt()
    }
}

/// Density access shared by the isotropic and full-covariance mixtures, used by
/// the Monte Carlo estimators. Inputs are assumed to have length [`dim`](Self::dim).
pub trait VariationalMixture: Sync {
    fn dim(&self) -> usize;
    fn n_components(&self) -> usize;
    /// `(log ν(x), ∇ log ν(x))` in one pass.
    fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>);
    fn log_density_at(&self, x: &DVector<f64>) -> f64 {
        self.eval(x).0
    }
    /// One draw from component `j`.
    fn draw_from(&self, j: usize, rng: &mut Rng) -> DVector<f64>;
}

/// Uniform-weight mixture of `N ≥ 1` isotropic Gaussians in a shared dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureState {
    components: Vec<IsotropicGaussian>,
}

impl MixtureState {
    pub fn new(components: Vec<IsotropicGaussian>) -> Result<Self> {
        let first = components.first().ok_or(Error::InvalidParameter {
            name: "components",
            reason: "a mixture needs at least one component".into(),
        })?;
        let d = first.dim();
        for c in &components {
            check_dim(d, c.dim())?;
        }
        Ok(Self { components })
    }

    pub fn single(component: IsotropicGaussian) -> Self {
        Self {
            components: vec![component],
        }
    }

    pub fn from_parts(means: &[Vec<f64>], variances: &[f64]) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: variances.len(),
            });
        }
        let comps = means
            .iter()
            .zip(variances)
            .map(|(m, &v)| IsotropicGaussian::from_slice(m, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self) -> &[IsotropicGaussian] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &IsotropicGaussian {
        &self.components[j]
    }

    pub fn means(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.components.iter().map(|c| &c.mean)
    }

    pub fn variances(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.variance).collect()
    }

    pub fn max_variance(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.variance)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Component log densities `log N(x; m_j, ε_j I)` plus `-log N` (the uniform weight).
    fn weighted_component_logs(&self, x: &DVector<f64>, out: &mut Vec<f64>) {
        let log_n = (self.len() as f64).ln();
        out.clear();
        out.extend(self.components.iter().map(|c| c.log_density_at(x) - log_n));
    }

    /// `log ν(x)` and the posterior responsibilities `w_j(x)`.
    pub(crate) fn log_density_and_responsibilities(&self, x: &DVector<f64>) -> (f64, Vec<f64>) {
        let mut logs = Vec::with_capacity(self.len());
        self.weighted_component_logs(x, &mut logs);
        let lse = log_sum_exp(&logs);
        for l in logs.iter_mut() {
            *l = (*l - lse).exp();
        }
        (lse, logs)
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(VariationalMixture::log_density_at(self, x))
    }

    /// `∇_x log ν(x) = Σ_j w_j(x) (m_j − x) / ε_j`.
    pub fn score(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.eval(x).1)
    }

    /// Trace of `∇² log ν(x)`, used by the trace-Hessian variance gradient.
    pub fn laplacian_log_density(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let d = self.dim() as f64;
        let (_, resp) = self.log_density_and_responsibilities(x);
        let mut score = DVector::zeros(self.dim());
        let mut second = 0.0;
        for (c, w) in self.components.iter().zip(&resp) {
            let diff = &c.mean - x;
            let eps = c.variance;
            second += w * (diff.norm_squared() / (eps * eps) - d / eps);
            score.axpy(w / eps, &diff, 1.0);
        }
        Ok(second - score.norm_squared())
    }

    /// `count` i.i.d. draws: a uniform component index, then `m_j + √ε_j z`.
    pub fn sample(&self, count: usize, rng: &mut Rng) -> Vec<DVector<f64>> {
        (0..count)
            .map(|_| {
                let j = rng.random_range(0..self.len());
                self.components[j].sample(rng)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MixtureStateJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MixtureStateJson = serde_json::from_str(text).map_err(|e| Error::Data(format!("state json: {e}")))?;
        doc.try_into()
    }
}

impl VariationalMixture for MixtureState {
    fn dim(&self) -> usize {
        MixtureState::dim(self)
    }

    fn n_components(&self) -> usize {
        self.len()
    }

    fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (lse, resp) = self.log_density_and_responsibilities(x);
        let mut score = DVector::zeros(self.dim());
        for (c, w) in self.components.iter().zip(&resp) {
            if *w > 0.0 {
                score.axpy(w / c.variance, &(&c.mean - x), 1.0);
            }
        }
        (lse, score)
    }

    fn log_density_at(&self, x: &DVector<f64>) -> f64 {
        let mut logs = Vec::with_capacity(self.len());
        self.weighted_component_logs(x, &mut logs);
        log_sum_exp(&logs)
    }

    fn draw_from(&self, j: usize, rng: &mut Rng) -> DVector<f64> {
        self.components[j].sample(rng)
    }
}

/// On-disk form of a [`MixtureState`]. Field names are part of the file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureStateJson {
    pub d: usize,
    pub n: usize,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

impl From<&MixtureState> for MixtureStateJson {
    fn from(s: &MixtureState) -> Self {
        Self {
            d: s.dim(),
            n: s.len(),
            means: s.means().map(|m| m.iter().copied().collect()).collect(),
            variances: s.variances(),
        }
    }
}

impl TryFrom<MixtureStateJson> for MixtureState {
    type Error = Error;

    fn try_from(doc: MixtureStateJson) -> Result<Self> {
        if doc.means.len() != doc.n || doc.variances.len() != doc.n {
            return Err(Error::Data(format!(
                "state json declares n = {} but has {} means and {} variances",
                doc.n,
                doc.means.len(),
                doc.variances.len()
            )));
        }
        if let Some(bad) = doc.means.iter().find(|m| m.len() != doc.d) {
            return Err(Error::DimensionMismatch {
                expected: doc.d,
                got: bad.len(),
            });
        }
        MixtureState::from_parts(&doc.means, &doc.variances)
    }
}

/// Gaussian with a full SPD covariance. The Cholesky factor is cached.
#[derive(Debug, Clone)]
pub struct FullCovGaussian {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl FullCovGaussian {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: covariance.nrows(),
            });
        }
        let scale = covariance.amax().max(1.0);
        if (&covariance - covariance.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidParameter {
                name: "covariance",
                reason: "not symmetric".into(),
            });
        }
        let chol = Cholesky::new(covariance.clone()).ok_or(Error::InvalidParameter {
            name: "covariance",
            reason: "not positive definite".into(),
        })?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            mean,
            covariance,
            chol,
            log_det,
        })
    }

    pub fn isotropic(g: &IsotropicGaussian) -> Self {
        let d = g.dim();
        Self::new(g.mean.clone(), DMatrix::identity(d, d) * g.variance).expect("isotropic covariance is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }

    pub(crate) fn log_density_at(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let l = self.chol.l_dirty();
        let z = l.solve_lower_triangular(&diff).expect("cholesky diagonal is positive");
        -0.5 * (self.dim() as f64 * LN_2PI + self.log_det + z.norm_squared())
    }

    /// `Σ⁻¹ v`.
    pub fn precision_times(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    pub fn sample(&self, rng: &mut Rng) -> DVector<f64> {
        let z = standard_normal_vector(self.dim(), rng);
        &self.mean + self.chol.l_dirty().lower_triangle() * z
    }
}

/// Uniform-weight mixture of full-covariance Gaussians.
#[derive(Debug, Clone)]
pub struct FullCovMixtureState {
    components: Vec<FullCovGaussian>,
}

impl FullCovMixtureState {
    pub fn new(components: Vec<FullCovGaussian>) -> Result<Self> {
        let first = components.first().ok_or(Error::InvalidParameter {
            name: "components",
            reason: "a mixture needs at least one component".into(),
        })?;
        let d = first.dim();
        for c in &components {
            check_dim(d, c.dim())?;
        }
        Ok(Self { components })
    }

    pub fn from_isotropic(state: &MixtureState) -> Self {
        Self {
            components: state.components().iter().map(FullCovGaussian::isotropic).collect(),
        }
    }

    pub fn components(&self) -> &[FullCovGaussian] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn responsibilities(&self, x: &DVector<f64>) -> (f64, Vec<f64>) {
        let log_n = (self.len() as f64).ln();
        let mut logs: Vec<f64> = self.components.iter().map(|c| c.log_density_at(x) - log_n).collect();
        let lse = log_sum_exp(&logs);
        for l in logs.iter_mut() {
            *l = (*l - lse).exp();
        }
        (lse, logs)
    }
}

impl VariationalMixture for FullCovMixtureState {
    fn dim(&self) -> usize {
        FullCovMixtureState::dim(self)
    }

    fn n_components(&self) -> usize {
        self.len()
    }

    fn eval(&self, x: &DVector<f64>) -> (f64, DVector<f64>) {
        let (lse, resp) = self.responsibilities(x);
        let mut score = DVector::zeros(self.dim());
        for (c, w) in self.components.iter().zip(&resp) {
            if *w > 0.0 {
                score.axpy(*w, &c.precision_times(&(&c.mean - x)), 1.0);
            }
        }
        (lse, score)
    }

    fn draw_from(&self, j: usize, rng: &mut Rng) -> DVector<f64> {
        self.components[j].sample(rng)
    }
}

/// `−½ log(2π)`, handy in tests and examples.
pub const NEG_HALF_LN_2PI: f64 = -0.918_938_533_204_672_8;
