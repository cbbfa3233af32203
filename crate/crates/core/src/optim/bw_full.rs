//! Full-covariance Bures-Wasserstein particle baseline.
//!
//! Each component follows `ṁ = −E[g]`, `Σ̇ = −(HΣ + ΣH)` with
//! `H = E[∇g] = Σ⁻¹ E[(y − m) gᵀ]`, discretized as one stochastic step per
//! iteration. The update `Σ ← MΣMᵀ` with `M = I − γ sym(H)` agrees with the
//! linearized flow to first order and keeps `Σ` symmetric positive
//! semi-definite.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::estimators::{component_noise, score_difference, EstimatorConfig, Sampling};
use crate::mixture::{FullCovGaussian, FullCovMixtureState};
use crate::targets::Target;

/// Monte Carlo `(E[g], Σ⁻¹E[(y − m)gᵀ])` for component `j`.
fn component_moments<T: Target + ?Sized>(
    state: &FullCovMixtureState,
    target: &T,
    j: usize,
    noise: &[DVector<f64>],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let c = &state.components()[j];
    let d = state.dim();
    let l = c.cholesky().l();
    let mut g_sum = DVector::zeros(d);
    let mut outer = DMatrix::zeros(d, d);
    for z in noise {
        check_dim(d, z.len())?;
        let dy = &l * z;
        let y = c.mean() + &dy;
        let g = score_difference(state, target, &y)?;
        outer.ger(1.0, &dy, &g, 1.0);
        g_sum += g;
    }
    let b = noise.len() as f64;
    outer /= b;
    Ok((g_sum / b, c.cholesky().solve(&outer)))
}

fn update_component(
    c: &FullCovGaussian,
    j: usize,
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    gamma: f64,
) -> Result<FullCovGaussian> {
    let d = c.dim();
    let sym = (h + h.transpose()) * 0.5;
    let m = DMatrix::identity(d, d) - sym * gamma;
    let sigma = &m * c.covariance() * m.transpose();
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let mean = c.mean() - g * gamma;
    if mean.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            iteration: 0,
            component: j,
        });
    }
    FullCovGaussian::new(mean, sigma).map_err(|_| Error::NotPositiveDefinite { component: j })
}

/// One BW-SGD step on every component with `cfg.grad_batch` samples each.
pub fn step_bw_full<T: Target + ?Sized>(
    state: &FullCovMixtureState,
    target: &T,
    gamma: f64,
    cfg: &EstimatorConfig,
    sampling: Sampling<'_>,
) -> Result<FullCovMixtureState> {
    cfg.validate()?;
    check_dim(target.dim(), state.dim())?;
    let batch = match sampling {
        Sampling::Fresh { .. } => cfg.grad_batch,
        Sampling::Frozen(noise) => noise.batch(),
    };
    let one = |j: usize| -> Result<FullCovGaussian> {
        let noise = component_noise(sampling, j, state.dim(), batch)?;
        let (g, h) = component_moments(state, target, j, &noise)?;
        update_component(&state.components()[j], j, &g, &h, gamma)
    };
    let comps = if cfg.parallel {
        (0..state.len()).into_par_iter().map(one).collect::<Result<Vec<_>>>()?
    } else {
        (0..state.len()).map(one).collect::<Result<Vec<_>>>()?
    };
    FullCovMixtureState::new(comps)
}
