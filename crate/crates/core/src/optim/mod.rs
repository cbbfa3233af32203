//! Optimization loop for mixture variational inference.
//!
//! Every iteration estimates the mixture gradients once and applies a mean
//! step together with the configured variance step. Component order is kept
//! fixed between iterations.

mod bw_full;
mod steps;

use std::str::FromStr;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::estimators::{
    estimate_gradients, estimate_kl_unnormalized, exact_gaussian_gradients, EstimatorConfig, GradientEstimate, Sampling,
};
use crate::geometry::kl_closed_form_iso;
use crate::mixture::{FullCovMixtureState, IsotropicGaussian, MixtureState, VARIANCE_FLOOR};
use crate::rng::{Rng, SeedStream};
use crate::targets::Target;

pub use bw_full::step_bw_full;
pub use steps::{step_gd_means, step_ibw_variances, step_md_variances, step_ngd};

pub const DEFAULT_KL_EVERY: usize = 10;
pub const DEFAULT_MD_EXPONENT_CLAMP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Means only; variances stay at their initial values.
    Gd,
    Ibw,
    Md,
    Ngd,
    #[serde(alias = "bw-full")]
    BwFull,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Gd,
        Algorithm::Ibw,
        Algorithm::Md,
        Algorithm::Ngd,
        Algorithm::BwFull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gd => "gd",
            Algorithm::Ibw => "ibw",
            Algorithm::Md => "md",
            Algorithm::Ngd => "ngd",
            Algorithm::BwFull => "bw_full",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL.into_iter().find(|a| a.name() == key).ok_or_else(|| {
            Error::Config(format!(
                "unknown algorithm `{s}`, expected one of gd, ibw, md, ngd, bw_full"
            ))
        })
    }
}

/// Source of the gradients fed to the update rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    MonteCarlo,
    /// Closed form; single isotropic component against an isotropic Gaussian target.
    Exact,
}

/// How the trace records the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlEvaluation {
    /// Unnormalized Monte Carlo estimate with `estimator.kl_batch` samples.
    #[default]
    MonteCarlo,
    /// Exact KL; single isotropic component against an isotropic Gaussian target.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub iterations: usize,
    pub estimator: EstimatorConfig,
    pub variance_floor: f64,
    pub md_exponent_clamp: f64,
    /// The objective is recorded at iteration 0, every `kl_every` iterations and at the end.
    pub kl_every: usize,
    pub gradients: GradientMode,
    pub kl: KlEvaluation,
}

impl OptimizerConfig {
    pub fn new(algorithm: Algorithm, step_size: f64, iterations: usize) -> Self {
        Self {
            algorithm,
            step_size,
            iterations,
            estimator: EstimatorConfig::default(),
            variance_floor: VARIANCE_FLOOR,
            md_exponent_clamp: DEFAULT_MD_EXPONENT_CLAMP,
            kl_every: DEFAULT_KL_EVERY,
            gradients: GradientMode::MonteCarlo,
            kl: KlEvaluation::MonteCarlo,
        }
    }

    /// `γ = 0` is accepted here so a run can replay its initial state.
    pub fn validate(&self) -> Result<()> {
        let invalid = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return invalid(
                "step_size",
                format!("must be finite and non-negative, got {}", self.step_size),
            );
        }
        if self.iterations == 0 {
            return invalid("iterations", "must be at least 1".into());
        }
        if self.kl_every == 0 {
            return invalid("kl_every", "must be at least 1".into());
        }
        if !(self.variance_floor >= VARIANCE_FLOOR) {
            return invalid("variance_floor", format!("must be at least {VARIANCE_FLOOR:e}"));
        }
        if !(self.md_exponent_clamp > 0.0 && self.md_exponent_clamp.is_finite()) {
            return invalid("md_exponent_clamp", "must be positive and finite".into());
        }
        self.estimator.validate()
    }
}

/// Parameters being optimized: isotropic for every rule except BW-full.
#[derive(Debug, Clone)]
pub enum VariationalState {
    Isotropic(MixtureState),
    FullCov(FullCovMixtureState),
}

impl VariationalState {
    /// The state kind `algorithm` operates on, starting from `state`.
    pub fn for_algorithm(state: MixtureState, algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::BwFull => VariationalState::FullCov(FullCovMixtureState::from_isotropic(&state)),
            _ => VariationalState::Isotropic(state),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            VariationalState::Isotropic(s) => s.dim(),
            VariationalState::FullCov(s) => s.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VariationalState::Isotropic(s) => s.len(),
            VariationalState::FullCov(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_isotropic(&self) -> Option<&MixtureState> {
        match self {
            VariationalState::Isotropic(s) => Some(s),
            VariationalState::FullCov(_) => None,
        }
    }

    /// Isotropic state with each covariance replaced by `tr(Σ)/d · I`.
    pub fn isotropic_projection(&self) -> MixtureState {
        match self {
            VariationalState::Isotropic(s) => s.clone(),
            VariationalState::FullCov(s) => {
                let d = s.dim() as f64;
                let comps = s
                    .components()
                    .iter()
                    .map(|c| {
                        IsotropicGaussian::new(c.mean().clone(), c.covariance().trace() / d)
                            .expect("trace of an SPD matrix is positive")
                    })
                    .collect();
                MixtureState::new(comps).expect("same shape as the source")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// Number of completed iterations.
    pub iter: usize,
    pub kl_estimate: f64,
    /// Cumulative optimization wall time in milliseconds, objective evaluation excluded.
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Strictly increasing in `iter`.
    pub rows: Vec<TraceRow>,
    /// Wall time of every completed iteration in milliseconds.
    pub step_ms: Vec<f64>,
    /// Last state reached without error.
    pub final_state: VariationalState,
    pub iterations_completed: usize,
    /// Number of clamped mirror-descent exponents.
    pub md_clamp_events: usize,
    pub error: Option<Error>,
}

impl RunTrace {
    pub fn final_kl(&self) -> Option<f64> {
        self.rows.last().map(|r| r.kl_estimate)
    }
}

/// Means i.i.d. uniform on `[−s, s]^d`, every variance equal to `r`.
pub fn init_mixture(d: usize, n: usize, s: f64, r: f64, rng: &mut Rng) -> Result<MixtureState> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter {
            name: "init",
            reason: "d and N must be at least 1".into(),
        });
    }
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: format!("must be finite and non-negative, got {s}"),
        });
    }
    let comps = (0..n)
        .map(|_| {
            let mean: Vec<f64> = (0..d).map(|_| s * rng.random_range(-1.0..=1.0)).collect();
            IsotropicGaussian::from_slice(&mean, r)
        })
        .collect::<Result<Vec<_>>>()?;
    MixtureState::new(comps)
}

/// Applies the mean and variance rules of `cfg.algorithm` to an isotropic
/// state. Returns the new state and the number of clamped exponents.
pub fn step_isotropic(
    state: &MixtureState,
    grads: &GradientEstimate,
    cfg: &OptimizerConfig,
) -> Result<(MixtureState, usize)> {
    let gamma = cfg.step_size;
    match cfg.algorithm {
        Algorithm::Gd => Ok((step_gd_means(state, grads, gamma)?, 0)),
        Algorithm::Ibw => {
            let moved = step_gd_means(state, grads, gamma)?;
            Ok((step_ibw_variances(&moved, grads, gamma, cfg.variance_floor)?, 0))
        }
        Algorithm::Md => {
            let moved = step_gd_means(state, grads, gamma)?;
            step_md_variances(&moved, grads, gamma, cfg.variance_floor, cfg.md_exponent_clamp)
        }
        Algorithm::Ngd => Ok((step_ngd(state, grads, gamma, cfg.variance_floor)?, 0)),
        Algorithm::BwFull => Err(Error::Config("bw_full operates on full-covariance states".into())),
    }
}

fn isotropic_gradients<T: Target + ?Sized>(
    state: &MixtureState,
    target: &T,
    cfg: &OptimizerConfig,
    sampling: Sampling<'_>,
) -> Result<GradientEstimate> {
    match cfg.gradients {
        GradientMode::MonteCarlo => estimate_gradients(state, target, &cfg.estimator, sampling),
        GradientMode::Exact => exact_gaussian_gradients(state, target),
    }
}

/// Every evaluation reuses the same draws, so consecutive trace values differ
/// only through the state.
fn objective<T: Target + ?Sized>(
    state: &VariationalState,
    target: &T,
    cfg: &OptimizerConfig,
    stream: SeedStream,
) -> Result<f64> {
    match (cfg.kl, state) {
        (KlEvaluation::MonteCarlo, VariationalState::Isotropic(s)) => {
            estimate_kl_unnormalized(s, target, &cfg.estimator, stream, 0)
        }
        (KlEvaluation::MonteCarlo, VariationalState::FullCov(s)) => {
            estimate_kl_unnormalized(s, target, &cfg.estimator, stream, 0)
        }
        (KlEvaluation::ClosedForm, VariationalState::Isotropic(s)) if s.len() == 1 => {
            let m = target
                .gaussian()
                .ok_or_else(|| Error::Unsupported("closed-form KL needs a Gaussian target".into()))?;
            let var = m
                .isotropic_variance
                .ok_or_else(|| Error::Unsupported("closed-form KL needs an isotropic target".into()))?;
            kl_closed_form_iso(s.component(0), &IsotropicGaussian::new(m.mean, var)?)
        }
        (KlEvaluation::ClosedForm, _) => Err(Error::Unsupported(
            "closed-form KL needs a single isotropic component".into(),
        )),
    }
}

fn with_iteration(err: Error, iteration: usize) -> Error {
    match err {
        Error::Divergence { component, .. } => Error::Divergence { iteration, component },
        other => other,
    }
}

fn one_step<T: Target + ?Sized>(
    state: &VariationalState,
    target: &T,
    cfg: &OptimizerConfig,
    stream: SeedStream,
    iteration: usize,
) -> Result<(VariationalState, usize)> {
    let sampling = Sampling::Fresh {
        stream,
        iteration: iteration as u64,
    };
    match state {
        VariationalState::Isotropic(s) => {
            let grads = isotropic_gradients(s, target, cfg, sampling)?;
            let (next, clamps) = step_isotropic(s, &grads, cfg)?;
            Ok((VariationalState::Isotropic(next), clamps))
        }
        VariationalState::FullCov(s) => {
            let next = step_bw_full(s, target, cfg.step_size, &cfg.estimator, sampling)?;
            Ok((VariationalState::FullCov(next), 0))
        }
    }
}

/// Runs `cfg.iterations` iterations from `initial`.
///
/// Configuration problems are returned as `Err`. Errors raised during the
/// iterations stop the loop and are stored in [`RunTrace::error`] together
/// with the rows recorded so far and the last good state.
pub fn run<T: Target + ?Sized>(
    initial: VariationalState,
    target: &T,
    cfg: &OptimizerConfig,
    stream: SeedStream,
) -> Result<RunTrace> {
    cfg.validate()?;
    check_dim(target.dim(), initial.dim())?;
    match (&initial, cfg.algorithm) {
        (VariationalState::FullCov(_), Algorithm::BwFull) => {
            if cfg.gradients == GradientMode::Exact {
                return Err(Error::Config("bw_full has no exact-gradient mode".into()));
            }
        }
        (VariationalState::Isotropic(s), a) if a != Algorithm::BwFull => {
            if cfg.gradients == GradientMode::Exact {
                exact_gaussian_gradients(s, target)?;
            }
        }
        (_, a) => {
            return Err(Error::Config(format!(
                "algorithm {} does not operate on this state kind",
                a.name()
            )))
        }
    }

    let mut trace = RunTrace {
        rows: Vec::new(),
        step_ms: Vec::with_capacity(cfg.iterations),
        iterations_completed: 0,
        md_clamp_events: 0,
        error: None,
        final_state: initial,
    };
    let kl0 = objective(&trace.final_state, target, cfg, stream)?;
    trace.rows.push(TraceRow {
        iter: 0,
        kl_estimate: kl0,
        wall_ms: 0.0,
    });

    let mut elapsed_ms = 0.0;
    for k in 1..=cfg.iterations {
        let started = Instant::now();
        let stepped = one_step(&trace.final_state, target, cfg, stream, k - 1);
        let ms = started.elapsed().as_secs_f64() * 1e3;
        match stepped {
            Ok((next, clamps)) => {
                trace.final_state = next;
                trace.md_clamp_events += clamps;
            }
            Err(e) => {
                trace.error = Some(with_iteration(e, k));
                break;
            }
        }
        elapsed_ms += ms;
        trace.step_ms.push(ms);
        trace.iterations_completed = k;
        if k % cfg.kl_every == 0 || k == cfg.iterations {
            match objective(&trace.final_state, target, cfg, stream) {
                Ok(kl) => trace.rows.push(TraceRow {
                    iter: k,
                    kl_estimate: kl,
                    wall_ms: elapsed_ms,
                }),
                Err(e) => {
                    trace.error = Some(e);
                    break;
                }
            }
        }
    }
    Ok(trace)
}
