//! Monte Carlo estimators of the KL objective and its gradients.
//!
//! For a uniform mixture `ν = (1/N) Σ_j N(m_j, ε_j I)` and target `π`, the
//! gradients of `F = KL(ν | π)` are expectations under each component of the
//! score difference `g(x) = ∇log ν(x) − ∇log π(x)`:
//!
//! ```text
//! ∇_{m_j} F = (1/N)        E_j[ g(x) ]
//! ∇_{ε_j} F = 1/(2 N ε_j)  E_j[ (x − m_j)ᵀ g(x) ]
//! ```
//!
//! The variance gradient only needs an inner product, so each sample costs
//! `O(d)` on top of the score evaluations.
//!
//! Samples come either from per-component substreams keyed by
//! `(seed, iteration, component)` or from a [`FrozenNoise`] table, which makes
//! the estimators deterministic functions of the parameters.

use nalgebra::DVector;
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::mixture::{standard_normal_vector, MixtureState, VariationalMixture};
use crate::rng::{Purpose, Rng, SeedStream};
use crate::targets::Target;

pub const DEFAULT_GRAD_BATCH: usize = 10;
pub const DEFAULT_KL_BATCH: usize = 1000;

/// KL samples are drawn in fixed-size chunks, one substream per chunk.
const KL_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    /// Samples per component per gradient estimate.
    pub grad_batch: usize,
    /// Samples per KL estimate.
    pub kl_batch: usize,
    /// Estimate components in parallel on the current rayon pool.
    pub parallel: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            grad_batch: DEFAULT_GRAD_BATCH,
            kl_batch: DEFAULT_KL_BATCH,
            parallel: false,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grad_batch == 0 || self.kl_batch == 0 {
            return Err(Error::InvalidParameter {
                name: "batch",
                reason: "grad_batch and kl_batch must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Source of the standard normal draws used by an estimate.
#[derive(Debug, Clone, Copy)]
pub enum Sampling<'a> {
    /// Fresh draws from the substreams of `stream` at `iteration`.
    Fresh { stream: SeedStream, iteration: u64 },
    /// A fixed table of draws ("common random numbers").
    Frozen(&'a FrozenNoise),
}

/// Per-component tables of standard normal vectors, `N × B` entries of length `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenNoise {
    draws: Vec<Vec<DVector<f64>>>,
}

impl FrozenNoise {
    pub fn draw(n: usize, d: usize, batch: usize, stream: SeedStream) -> Self {
        let draws = (0..n)
            .map(|j| {
                let mut rng = stream.substream(Purpose::Frozen, 0, j as u64);
                (0..batch).map(|_| standard_normal_vector(d, &mut rng)).collect()
            })
            .collect();
        Self { draws }
    }

    pub fn n_components(&self) -> usize {
        self.draws.len()
    }

    pub fn batch(&self) -> usize {
        self.draws.first().map_or(0, Vec::len)
    }

    pub fn component(&self, j: usize) -> &[DVector<f64>] {
        &self.draws[j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentGradient {
    /// `∇_{m_j} F`, already carrying the `1/N` factor.
    pub mean_grad: DVector<f64>,
    /// `∇_{ε_j} F`, already carrying the `1/N` factor.
    pub var_grad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub components: Vec<ComponentGradient>,
    /// Samples per component; `0` for closed-form gradients.
    pub batch_size: usize,
}

impl GradientEstimate {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub(crate) fn check_shape(&self, state: &MixtureState) -> Result<()> {
        check_dim(state.len(), self.len())?;
        for c in &self.components {
            check_dim(state.dim(), c.mean_grad.len())?;
        }
        Ok(())
    }
}

/// Mean and standard error of a Monte Carlo average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

impl McEstimate {
    fn from_sums(sum: f64, sum_sq: f64, count: usize) -> Self {
        let n = count as f64;
        let mean = sum / n;
        let var = if count > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }
}

/// `g(x) = ∇log ν(x) − ∇log π(x)`, rejecting non-finite target gradients.
pub(crate) fn score_difference<M, T>(mix: &M, target: &T, x: &DVector<f64>) -> Result<DVector<f64>>
where
    M: VariationalMixture + ?Sized,
    T: Target + ?Sized,
{
    let grad_target = target.grad_log_density(x);
    if grad_target.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient {
            point: x.iter().copied().collect(),
        });
    }
    Ok(mix.eval(x).1 - grad_target)
}

fn check_shapes<T: Target + ?Sized>(state: &MixtureState, target: &T) -> Result<()> {
    check_dim(target.dim(), state.dim())
}

pub(crate) fn component_noise(sampling: Sampling<'_>, j: usize, d: usize, batch: usize) -> Result<Vec<DVector<f64>>> {
    match sampling {
        Sampling::Fresh { stream, iteration } => {
            let mut rng = stream.substream(Purpose::Gradient, iteration, j as u64);
            Ok((0..batch).map(|_| standard_normal_vector(d, &mut rng)).collect())
        }
        Sampling::Frozen(noise) => {
            if j >= noise.n_components() {
                return Err(Error::DimensionMismatch {
                    expected: j + 1,
                    got: noise.n_components(),
                });
            }
            Ok(noise.component(j).to_vec())
        }
    }
}

/// Running sums for one component: `Σ g`, `Σ g²`, `Σ t`, `Σ t²` with `t = (x−m)ᵀg`.
struct ComponentSums {
    g: DVector<f64>,
    g_sq: DVector<f64>,
    t: f64,
    t_sq: f64,
    count: usize,
}

fn component_sums<T: Target + ?Sized>(
    state: &MixtureState,
    target: &T,
    j: usize,
    noise: &[DVector<f64>],
) -> Result<ComponentSums> {
    let comp = state.component(j);
    let sd = comp.variance().sqrt();
    let d = state.dim();
    let mut sums = ComponentSums {
        g: DVector::zeros(d),
        g_sq: DVector::zeros(d),
        t: 0.0,
        t_sq: 0.0,
        count: noise.len(),
    };
    for z in noise {
        check_dim(d, z.len())?;
        let x = comp.mean() + z * sd;
        let g = score_difference(state, target, &x)?;
        let t = sd * z.dot(&g);
        sums.g += &g;
        sums.g_sq += g.component_mul(&g);
        sums.t += t;
        sums.t_sq += t * t;
    }
    Ok(sums)
}

fn gradient_from_sums(state: &MixtureState, j: usize, s: &ComponentSums) -> ComponentGradient {
    let n = state.len() as f64;
    let b = s.count as f64;
    ComponentGradient {
        mean_grad: &s.g / (b * n),
        var_grad: s.t / (b * 2.0 * n * state.component(j).variance()),
    }
}

/// Monte Carlo estimate of `(∇_{m_j} F, ∇_{ε_j} F)` for every component.
pub fn estimate_gradients<T: Target + ?Sized>(
    state: &MixtureState,
    target: &T,
    cfg: &EstimatorConfig,
    sampling: Sampling<'_>,
) -> Result<GradientEstimate> {
    cfg.validate()?;
    check_shapes(state, target)?;
    let batch = match sampling {
        Sampling::Fresh { .. } => cfg.grad_batch,
        Sampling::Frozen(noise) => noise.batch(),
    };
    let one = |j: usize| -> Result<ComponentGradient> {
        let noise = component_noise(sampling, j, state.dim(), batch)?;
        let sums = component_sums(state, target, j, &noise)?;
        Ok(gradient_from_sums(state, j, &sums))
    };
    let components = if cfg.parallel {
        (0..state.len()).into_par_iter().map(one).collect::<Result<Vec<_>>>()?
    } else {
        (0..state.len()).map(one).collect::<Result<Vec<_>>>()?
    };
    Ok(GradientEstimate {
        components,
        batch_size: batch,
    })
}

/// Gradient estimate for one component together with Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDiagnostics {
    pub mean_grad: DVector<f64>,
    pub mean_grad_std_error: DVector<f64>,
    pub var_grad: McEstimate,
}

pub fn component_diagnostics<T: Target + ?Sized>(
    state: &MixtureState,
    target: &T,
    j: usize,
    batch: usize,
    rng: &mut Rng,
) -> Result<ComponentDiagnostics> {
    check_shapes(state, target)?;
    let noise: Vec<_> = (0..batch).map(|_| standard_normal_vector(state.dim(), rng)).collect();
    let s = component_sums(state, target, j, &noise)?;
    let n = state.len() as f64;
    let b = batch as f64;
    let mean_grad = &s.g / (b * n);
    let mean_grad_std_error = DVector::from_fn(state.dim(), |i, _| {
        McEstimate::from_sums(s.g[i], s.g_sq[i], batch).std_error / n
    });
    let scale = 2.0 * n * state.component(j).variance();
    let t = McEstimate::from_sums(s.t, s.t_sq, batch);
    Ok(ComponentDiagnostics {
        mean_grad,
        mean_grad_std_error,
        var_grad: McEstimate {
            value: t.value / scale,
            std_error: t.std_error / scale,
        },
    })
}

/// Variance gradient through the trace-Hessian identity
/// `∇_{ε_j} F = (1/2N) Tr E_j[∇² log(ν/π)]`. Needs an analytic target Hessian.
pub fn var_grad_hessian_form<T: Target + ?Sized>(
    state: &MixtureState,
    target: &T,
    j: usize,
    batch: usize,
    rng: &mut Rng,
) -> Result<McEstimate> {
    check_shapes(state, target)?;
    let comp = state.component(j);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..batch {
        let x = comp.sample(rng);
        let hess = target
            .hessian_log_density(&x)
            .ok_or_else(|| Error::Unsupported("target exposes no Hessian".into()))?;
        let v = state.laplacian_log_density(&x)? - hess.trace();
        sum += v;
        sum_sq += v * v;
    }
    let e = McEstimate::from_sums(sum, sum_sq, batch);
    let scale = 2.0 * state.len() as f64;
    Ok(McEstimate {
        value: e.value / scale,
        std_error: e.std_error / scale,
    })
}

/// Closed-form gradients of `KL(N(m, εI) | N(μ*, ε* I))`:
/// `∇_m = (m − μ*)/ε*` and `∇_ε = (d/2)(1/ε* − 1/ε)`.
pub fn exact_gaussian_gradients<T: Target + ?Sized>(state: &MixtureState, target: &T) -> Result<GradientEstimate> {
    check_shapes(state, target)?;
    if state.len() != 1 {
        return Err(Error::Unsupported(format!(
            "closed-form gradients need a single component, got {}",
            state.len()
        )));
    }
    let moments = target
        .gaussian()
        .ok_or_else(|| Error::Unsupported("closed-form gradients need a Gaussian target".into()))?;
    let target_var = moments
        .isotropic_variance
        .ok_or_else(|| Error::Unsupported("closed-form gradients need an isotropic target".into()))?;
    let c = state.component(0);
    let d = state.dim() as f64;
    Ok(GradientEstimate {
        components: vec![ComponentGradient {
            mean_grad: (c.mean() - &moments.mean) / target_var,
            var_grad: 0.5 * d * (1.0 / target_var - 1.0 / c.variance()),
        }],
        batch_size: 0,
    })
}

/// `(1/B) Σ_b [log ν(x_b) − log π̃(x_b)]` with `x_b ~ ν`, plus its standard error.
pub fn estimate_kl_with_error<M, T>(
    mix: &M,
    target: &T,
    cfg: &EstimatorConfig,
    stream: SeedStream,
    iteration: u64,
) -> Result<McEstimate>
where
    M: VariationalMixture + ?Sized,
    T: Target + ?Sized,
{
    cfg.validate()?;
    check_dim(target.dim(), mix.dim())?;
    let chunks = cfg.kl_batch.div_ceil(KL_CHUNK);
    let chunk = |c: usize| -> Result<(f64, f64)> {
        let mut rng = stream.substream(Purpose::Kl, iteration, c as u64);
        let count = KL_CHUNK.min(cfg.kl_batch - c * KL_CHUNK);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let j = rng.random_range(0..mix.n_components());
            let x = mix.draw_from(j, &mut rng);
            let v = mix.log_density_at(&x) - target.log_density(&x);
            if !v.is_finite() {
                return Err(Error::NonFiniteGradient {
                    point: x.iter().copied().collect(),
                });
            }
            s += v;
            s2 += v * v;
        }
        Ok((s, s2))
    };
    let parts = if cfg.parallel {
        (0..chunks).into_par_iter().map(chunk).collect::<Result<Vec<_>>>()?
    } else {
        (0..chunks).map(chunk).collect::<Result<Vec<_>>>()?
    };
    let (sum, sum_sq) = parts.iter().fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    Ok(McEstimate::from_sums(sum, sum_sq, cfg.kl_batch))
}

/// Unnormalized KL estimate: `KL(ν | π) + log Z_π` in expectation.
pub fn estimate_kl_unnormalized<M, T>(
    mix: &M,
    target: &T,
    cfg: &EstimatorConfig,
    stream: SeedStream,
    iteration: u64,
) -> Result<f64>
where
    M: VariationalMixture + ?Sized,
    T: Target + ?Sized,
{
    estimate_kl_with_error(mix, target, cfg, stream, iteration).map(|e| e.value)
}

/// Frozen-sample KL surrogate
/// `(1/N) Σ_j (1/B) Σ_b [log ν_ref(x_jb) − log π̃(x_jb)]`, `x_jb = m_j + √ε_j z_jb`.
///
/// Sample locations follow `state`; the mixture density is evaluated with the
/// parameters of `reference`. At `state == reference`, the parameter gradient
/// of this function is exactly what [`estimate_gradients`] returns for the
/// same noise, since `E_j[∇_θ log ν]` terms are the ones the score form drops.
pub fn frozen_kl_surrogate<T: Target + ?Sized>(
    state: &MixtureState,
    reference: &MixtureState,
    target: &T,
    noise: &FrozenNoise,
) -> Result<f64> {
    check_shapes(state, target)?;
    check_dim(state.len(), reference.len())?;
    check_dim(state.len(), noise.n_components())?;
    let mut total = 0.0;
    for (j, comp) in state.components().iter().enumerate() {
        let sd = comp.variance().sqrt();
        let mut acc = 0.0;
        for z in noise.component(j) {
            let x = comp.mean() + z * sd;
            acc += VariationalMixture::log_density_at(reference, &x) - target.log_density(&x);
        }
        total += acc / noise.batch() as f64;
    }
    Ok(total / state.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::kl_closed_form_iso;
    use crate::mixture::IsotropicGaussian;
    use crate::targets::{finite_difference_gradient, GaussianMixtureTarget, Shifted};

    fn iso(m: &[f64], e: f64) -> IsotropicGaussian {
        IsotropicGaussian::from_slice(m, e).unwrap()
    }

    #[test]
    fn stationary_at_the_target() {
        let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0, 0.0, 0.0], 1.0).unwrap();
        let state = MixtureState::single(iso(&[0.0, 0.0, 0.0], 1.0));
        let cfg = EstimatorConfig {
            grad_batch: 10_000,
            ..Default::default()
        };
        let est = estimate_gradients(
            &state,
            &target,
            &cfg,
            Sampling::Fresh {
                stream: SeedStream::new(1),
                iteration: 0,
            },
        )
        .unwrap();
        assert!(est.components[0].mean_grad.norm() <= 0.05);
        assert!(est.components[0].var_grad.abs() <= 0.05);
        // score difference vanishes pointwise here
        assert!(est.components[0].var_grad.abs() < 1e-12);
    }

    #[test]
    fn mean_gradient_recovers_the_offset() {
        let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0, 0.0], 1.0).unwrap();
        let m = [0.7, -1.3];
        let state = MixtureState::single(iso(&m, 1.0));
        let mut rng = SeedStream::new(2).substream(Purpose::Gradient, 0, 0);
        let b = 10_000;
        let diag = component_diagnostics(&state, &target, 0, b, &mut rng).unwrap();
        for (i, mi) in m.iter().enumerate() {
            assert!((diag.mean_grad[i] - mi).abs() <= 4.0 * diag.mean_grad_std_error[i] + 1e-12);
        }
    }

    #[test]
    fn variance_gradient_quarter() {
        let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0], 1.0).unwrap();
        let state = MixtureState::single(iso(&[0.0], 2.0));
        let mut rng = SeedStream::new(3).substream(Purpose::Gradient, 0, 0);
        let diag = component_diagnostics(&state, &target, 0, 10_000, &mut rng).unwrap();
        assert!((diag.var_grad.value - 0.25).abs() <= 4.0 * diag.var_grad.std_error);
        let hess = var_grad_hessian_form(&state, &target, 0, 1000, &mut rng).unwrap();
        // both Laplacians are constant for Gaussians, so this form is exact
        assert!((hess.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn exact_gradients() {
        let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0], 1.0).unwrap();
        let state = MixtureState::single(iso(&[2.0], 1.0));
        let g = exact_gaussian_gradients(&state, &target).unwrap();
        assert_eq!(g.components[0].mean_grad[0], 2.0);
        assert_eq!(g.components[0].var_grad, 0.0);
        let same = exact_gaussian_gradients(&MixtureState::single(iso(&[0.0], 1.0)), &target).unwrap();
        assert_eq!(same.components[0].mean_grad[0], 0.0);
        let two = MixtureState::new(vec![iso(&[0.0], 1.0), iso(&[1.0], 1.0)]).unwrap();
        assert!(matches!(
            exact_gaussian_gradients(&two, &target),
            Err(Error::Unsupported(_))
        ));
        let funnel = crate::targets::FunnelTarget::new(1.2).unwrap();
        let s2 = MixtureState::single(iso(&[0.0, 0.0], 1.0));
        assert!(matches!(
            exact_gaussian_gradients(&s2, &funnel),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn exact_gradients_match_closed_form_kl_differences() {
        let mut rng = SeedStream::new(4).substream(Purpose::Gradient, 0, 0);
        for _ in 0..100 {
            let d = rng.random_range(1..6);
            let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ev = rng.random_range(0.2..4.0);
            let m: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let e = rng.random_range(0.2..4.0);
            let target = GaussianMixtureTarget::isotropic_gaussian(&mu, ev).unwrap();
            let q = iso(&mu, ev);
            let g = exact_gaussian_gradients(&MixtureState::single(iso(&m, e)), &target).unwrap();
            let mut theta = m.clone();
            theta.push(e);
            let f = |t: &DVector<f64>| {
                let p = IsotropicGaussian::from_slice(&t.as_slice()[..d], t[d]).unwrap();
                kl_closed_form_iso(&p, &q).unwrap()
            };
            let fd = finite_difference_gradient(f, &DVector::from_vec(theta), 1e-5);
            let mut an = g.components[0].mean_grad.clone().data.as_vec().clone();
            an.push(g.components[0].var_grad);
            let an = DVector::from_vec(an);
            assert!(crate::targets::gradient_mismatch(&an, &fd) < 1e-8, "{an} vs {fd}");
        }
    }

    #[test]
    fn kl_of_the_target_itself_is_zero() {
        let target = GaussianMixtureTarget::isotropic_gaussian(&[1.0, -1.0], 0.5).unwrap();
        let state = MixtureState::single(iso(&[1.0, -1.0], 0.5));
        let kl = estimate_kl_unnormalized(&state, &target, &EstimatorConfig::default(), SeedStream::new(5), 0).unwrap();
        assert_eq!(kl, 0.0);
    }

    #[test]
    fn kl_shift() {
        let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0], 2.0).unwrap();
        let shifted = Shifted {
            inner: target.clone(),
            shift: 3.25,
        };
        let state = MixtureState::new(vec![iso(&[0.5], 1.0), iso(&[-1.0], 0.3)]).unwrap();
        let cfg = EstimatorConfig::default();
        let a = estimate_kl_unnormalized(&state, &target, &cfg, SeedStream::new(6), 2).unwrap();
        let b = estimate_kl_unnormalized(&state, &shifted, &cfg, SeedStream::new(6), 2).unwrap();
        assert!((a - b - 3.25).abs() < 1e-12);
    }

    #[test]
    fn kl_estimate_brackets_closed_form() {
        let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0, 1.0], 1.5).unwrap();
        let p = iso(&[0.4, 0.2], 0.8);
        let exact = kl_closed_form_iso(&p, &iso(&[0.0, 1.0], 1.5)).unwrap();
        let state = MixtureState::single(p);
        for seed in 0..20 {
            let e =
                estimate_kl_with_error(&state, &target, &EstimatorConfig::default(), SeedStream::new(seed), 0).unwrap();
            assert!((e.value - exact).abs() <= 4.0 * e.std_error, "seed {seed}");
        }
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0, 0.0], 3.0).unwrap();
        let state = MixtureState::new(vec![
            iso(&[1.0, 0.0], 1.0),
            iso(&[-2.0, 1.0], 0.5),
            iso(&[0.0, 3.0], 2.0),
        ])
        .unwrap();
        let serial = EstimatorConfig {
            kl_batch: 1000,
            ..Default::default()
        };
        let par = EstimatorConfig {
            parallel: true,
            ..serial
        };
        let s = SeedStream::new(9);
        let a = estimate_gradients(
            &state,
            &target,
            &serial,
            Sampling::Fresh {
                stream: s,
                iteration: 4,
            },
        )
        .unwrap();
        let b = estimate_gradients(
            &state,
            &target,
            &par,
            Sampling::Fresh {
                stream: s,
                iteration: 4,
            },
        )
        .unwrap();
        assert_eq!(a, b);
        let ka = estimate_kl_unnormalized(&state, &target, &serial, s, 4).unwrap();
        let kb = estimate_kl_unnormalized(&state, &target, &par, s, 4).unwrap();
        assert_eq!(ka.to_bits(), kb.to_bits());
    }

    #[test]
    fn non_finite_target_gradient_is_reported() {
        struct Bad;
        impl Target for Bad {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, _: &DVector<f64>) -> f64 {
                0.0
            }
            fn grad_log_density(&self, _: &DVector<f64>) -> DVector<f64> {
                DVector::from_element(1, f64::NAN)
            }
        }
        let state = MixtureState::single(iso(&[0.0], 1.0));
        let r = estimate_gradients(
            &state,
            &Bad,
            &EstimatorConfig::default(),
            Sampling::Fresh {
                stream: SeedStream::new(0),
                iteration: 0,
            },
        );
        assert!(matches!(r, Err(Error::NonFiniteGradient { .. })));
    }

    #[test]
    fn hessian_form_needs_hessian() {
        let funnel = crate::targets::FunnelTarget::new(1.2).unwrap();
        let state = MixtureState::single(iso(&[0.0, 0.0], 1.0));
        let mut rng = SeedStream::new(0).substream(Purpose::Gradient, 0, 0);
        assert!(matches!(
            var_grad_hessian_form(&state, &funnel, 0, 10, &mut rng),
            Err(Error::Unsupported(_))
        ));
    }
}
