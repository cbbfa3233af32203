//! One-step update rules on an isotropic mixture given a gradient estimate.
//!
//! Gradients carry the `1/N` factor of the mixture objective; every rule
//! multiplies it back by `N`, exactly once.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimators::GradientEstimate;
use crate::mixture::{IsotropicGaussian, MixtureState};

fn rebuild(state: &MixtureState, parts: Vec<(DVector<f64>, f64)>) -> Result<MixtureState> {
    let comps = parts
        .into_iter()
        .enumerate()
        .map(|(j, (m, e))| {
            if !e.is_finite() || m.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    iteration: 0,
                    component: j,
                });
            }
            IsotropicGaussian::new(m, e)
        })
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(comps.len(), state.len());
    MixtureState::new(comps)
}

fn check_floor(j: usize, value: f64, floor: f64) -> Result<()> {
    if value < floor || value.is_nan() {
        Err(Error::VarianceFloor {
            component: j,
            value,
            floor,
        })
    } else {
        Ok(())
    }
}

/// `m_j ← m_j − γN·∇_{m_j}F`; variances untouched.
pub fn step_gd_means(state: &MixtureState, grads: &GradientEstimate, gamma: f64) -> Result<MixtureState> {
    grads.check_shape(state)?;
    let scale = gamma * state.len() as f64;
    let parts = state
        .components()
        .iter()
        .zip(&grads.components)
        .map(|(c, g)| (c.mean() - &g.mean_grad * scale, c.variance()))
        .collect();
    rebuild(state, parts)
}

/// `ε_j ← (1 − (2Nγ/d)·∇_{ε_j}F)² ε_j`; means untouched.
pub fn step_ibw_variances(
    state: &MixtureState,
    grads: &GradientEstimate,
    gamma: f64,
    floor: f64,
) -> Result<MixtureState> {
    grads.check_shape(state)?;
    let rate = 2.0 * state.len() as f64 * gamma / state.dim() as f64;
    let mut parts = Vec::with_capacity(state.len());
    for (j, (c, g)) in state.components().iter().zip(&grads.components).enumerate() {
        let e = (1.0 - rate * g.var_grad).powi(2) * c.variance();
        check_floor(j, e, floor)?;
        parts.push((c.mean().clone(), e));
    }
    rebuild(state, parts)
}

/// `ε_j ← ε_j·exp(−(2Nγ/d)·∇_{ε_j}F)` with the exponent clamped to `[−clamp, clamp]`.
/// Returns the new state and the number of clamped exponents.
pub fn step_md_variances(
    state: &MixtureState,
    grads: &GradientEstimate,
    gamma: f64,
    floor: f64,
    clamp: f64,
) -> Result<(MixtureState, usize)> {
    grads.check_shape(state)?;
    let rate = 2.0 * state.len() as f64 * gamma / state.dim() as f64;
    let mut clamped = 0;
    let mut parts = Vec::with_capacity(state.len());
    for (j, (c, g)) in state.components().iter().zip(&grads.components).enumerate() {
        let raw = -rate * g.var_grad;
        if raw.is_nan() {
            return Err(Error::Divergence {
                iteration: 0,
                component: j,
            });
        }
        let expo = raw.clamp(-clamp, clamp);
        if expo != raw {
            clamped += 1;
        }
        let e = c.variance() * expo.exp();
        check_floor(j, e, floor)?;
        parts.push((c.mean().clone(), e));
    }
    Ok((rebuild(state, parts)?, clamped))
}

/// Coupled natural-gradient step: `1/ε'_j = 1/ε_j + (2Nγ/d)·∇_{ε_j}F`, then
/// `m_j ← m_j − ε'_j·Nγ·∇_{m_j}F` with the updated variance.
pub fn step_ngd(state: &MixtureState, grads: &GradientEstimate, gamma: f64, floor: f64) -> Result<MixtureState> {
    grads.check_shape(state)?;
    let n = state.len() as f64;
    let rate = 2.0 * n * gamma / state.dim() as f64;
    let mut parts = Vec::with_capacity(state.len());
    for (j, (c, g)) in state.components().iter().zip(&grads.components).enumerate() {
        let inverse = 1.0 / c.variance() + rate * g.var_grad;
        if inverse.is_nan() {
            return Err(Error::Divergence {
                iteration: 0,
                component: j,
            });
        }
        if inverse <= 0.0 {
            return Err(Error::NegativeVariance { component: j, inverse });
        }
        let e = 1.0 / inverse;
        check_floor(j, e, floor)?;
        parts.push((c.mean() - &g.mean_grad * (e * n * gamma), e));
    }
    rebuild(state, parts)
}
