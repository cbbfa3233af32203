//! Closed-form geometry of isotropic Gaussians and of their mixing measures.
//!
//! Isotropic Gaussians are closed under Bures-Wasserstein geodesics, so the
//! distance, geodesic and exponential map all reduce to formulas in the mean
//! and the scalar variance.

pub mod assignment;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::mixture::{log_sum_exp, IsotropicGaussian, MixtureState, VariationalMixture};
use crate::targets::{GaussianMixtureTargetSpec, Target};

pub use assignment::{optimal_assignment, Assignment};

/// A uniform-weight mixture seen as the discrete measure `(1/N) Σ δ_(m_j, ε_j)`
/// on parameter space.
pub type MixingMeasure = MixtureState;

/// `BW²(p, q) = ‖m − m'‖² + d (ε + τ − 2√(ετ))`.
pub fn bw_distance_sq_iso(p: &IsotropicGaussian, q: &IsotropicGaussian) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    let d = p.dim() as f64;
    let (e, t) = (p.variance(), q.variance());
    // (√ε − √τ)² is the cancellation-free form of ε + τ − 2√(ετ)
    let scale = (e.sqrt() - t.sqrt()).powi(2);
    Ok((p.mean() - q.mean()).norm_squared() + d * scale)
}

/// `KL(p | q)` between isotropic Gaussians `p = N(m, εI)`, `q = N(m_q, ε_q I)`:
/// `½(dε/ε_q + ‖m − m_q‖²/ε_q − d + d log(ε_q/ε))`.
pub fn kl_closed_form_iso(p: &IsotropicGaussian, q: &IsotropicGaussian) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    let d = p.dim() as f64;
    let ratio = p.variance() / q.variance();
    let sq = (p.mean() - q.mean()).norm_squared();
    // d(r − 1 − log r) is ≥ 0 and avoids cancelling large terms
    Ok(0.5 * (d * (ratio - 1.0 - ratio.ln()) + sq / q.variance()))
}

/// Exponential map at `p`: `N(m + a, (1 + s)² ε I)`.
pub fn exp_map_iso(p: &IsotropicGaussian, a: &DVector<f64>, s: f64) -> Result<IsotropicGaussian> {
    check_dim(p.dim(), a.len())?;
    if s == -1.0 {
        return Err(Error::InvalidParameter {
            name: "s",
            reason: "s = -1 collapses the variance to zero".into(),
        });
    }
    IsotropicGaussian::new(p.mean() + a, (1.0 + s).powi(2) * p.variance())
}

/// Point at time `t ∈ [0, 1]` on the Bures-Wasserstein geodesic from `p` to `q`.
pub fn geodesic_iso(p: &IsotropicGaussian, q: &IsotropicGaussian, t: f64) -> Result<IsotropicGaussian> {
    check_dim(p.dim(), q.dim())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must lie in [0, 1], got {t}"),
        });
    }
    let a = (q.variance() / p.variance()).sqrt();
    let mean = p.mean() * (1.0 - t) + q.mean() * t;
    IsotropicGaussian::new(mean, ((1.0 - t) + t * a).powi(2) * p.variance())
}

fn bw_cost_matrix(a: &MixingMeasure, b: &MixingMeasure) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        bw_distance_sq_iso(a.component(i), b.component(j)).expect("dimensions checked")
    })
}

fn check_measures(a: &MixingMeasure, b: &MixingMeasure) -> Result<()> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.len(), b.len())
}

/// Optimal matching between the atoms of two mixing measures under the `BW²` cost.
pub fn wbw_assignment(a: &MixingMeasure, b: &MixingMeasure) -> Result<Assignment> {
    check_measures(a, b)?;
    Ok(optimal_assignment(&bw_cost_matrix(a, b)))
}

/// `W²_bw(A, B) = min_σ (1/N) Σ_j BW²(A_j, B_σ(j))`.
pub fn wbw_distance_sq(a: &MixingMeasure, b: &MixingMeasure) -> Result<f64> {
    Ok(wbw_assignment(a, b)?.cost / a.len() as f64)
}

/// Squared `W₂` between the uniform point clouds of component means.
pub fn point_cloud_w2_sq(a: &MixingMeasure, b: &MixingMeasure) -> Result<f64> {
    check_measures(a, b)?;
    let cost = DMatrix::from_fn(a.len(), b.len(), |i, j| {
        (a.component(i).mean() - b.component(j).mean()).norm_squared()
    });
    Ok(optimal_assignment(&cost).cost / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelonReport {
    pub wbw_sq: f64,
    pub w2_sq: f64,
    /// `W²_bw − W₂²`.
    pub gap: f64,
    /// `2√(2 d ε*)`, `ε*` the largest variance over both mixtures.
    pub bound: f64,
    pub holds: bool,
}

/// Checks `0 ≤ W²_bw − W₂² ≤ 2√(2dε*)` against a supplied `W₂²`, tolerance `1e-9`.
pub fn delon_gap_check(a: &MixingMeasure, b: &MixingMeasure, w2_sq: f64) -> Result<DelonReport> {
    let wbw_sq = wbw_distance_sq(a, b)?;
    let eps_star = a.max_variance().max(b.max_variance());
    let bound = 2.0 * (2.0 * a.dim() as f64 * eps_star).sqrt();
    let gap = wbw_sq - w2_sq;
    Ok(DelonReport {
        wbw_sq,
        w2_sq,
        gap,
        bound,
        holds: gap >= -1e-9 && gap <= bound + 1e-9,
    })
}

fn trapezoid_weights(n: usize) -> impl Fn(usize) -> f64 {
    move |i| if i == 0 || i == n - 1 { 0.5 } else { 1.0 }
}

/// Grid bounds spanning `pad·√ε_max` beyond the extreme atom means, per axis.
fn grid_bounds(atoms: &[(IsotropicGaussian, f64)], pad: f64) -> Vec<(f64, f64)> {
    let d = atoms[0].0.dim();
    let sd = atoms.iter().map(|(g, _)| g.variance()).fold(0.0, f64::max).sqrt();
    (0..d)
        .map(|k| {
            let lo = atoms.iter().map(|(g, _)| g.mean()[k]).fold(f64::INFINITY, f64::min);
            let hi = atoms.iter().map(|(g, _)| g.mean()[k]).fold(f64::NEG_INFINITY, f64::max);
            (lo - pad * sd, hi + pad * sd)
        })
        .collect()
}

/// Trapezoid quadrature of `f` over a tensor grid (`d ≤ 2`).
fn tensor_trapezoid<F: Fn(&DVector<f64>) -> f64>(bounds: &[(f64, f64)], nodes: usize, f: F) -> Result<f64> {
    if nodes < 2 {
        return Err(Error::InvalidParameter {
            name: "nodes",
            reason: "need at least 2 nodes per axis".into(),
        });
    }
    let w = trapezoid_weights(nodes);
    let steps: Vec<f64> = bounds.iter().map(|(lo, hi)| (hi - lo) / (nodes - 1) as f64).collect();
    let node = |axis: usize, i: usize| bounds[axis].0 + steps[axis] * i as f64;
    match bounds.len() {
        1 => {
            let mut x = DVector::zeros(1);
            let mut total = 0.0;
            for i in 0..nodes {
                x[0] = node(0, i);
                total += w(i) * f(&x);
            }
            Ok(total * steps[0])
        }
        2 => {
            let mut x = DVector::zeros(2);
            let mut total = 0.0;
            for i in 0..nodes {
                x[0] = node(0, i);
                for j in 0..nodes {
                    x[1] = node(1, j);
                    total += w(i) * w(j) * f(&x);
                }
            }
            Ok(total * steps[0] * steps[1])
        }
        d => Err(Error::Unsupported(format!(
            "tensor-grid quadrature only in d ≤ 2, got d = {d}"
        ))),
    }
}

/// Approximation-bound constant of an isotropic mixing measure `p*`,
/// `C²_π = ∫ [∫ k(x)² dp*] / [∫ k(x) dp*] dx`, by trapezoid quadrature on a
/// grid reaching `10√ε_max` past the extreme means with `nodes` points per axis.
pub fn approx_bound_constant(spec: &GaussianMixtureTargetSpec, nodes: usize) -> Result<f64> {
    let atoms = spec
        .isotropic_atoms()
        .ok_or_else(|| Error::Unsupported("approximation constant needs isotropic atoms".into()))?;
    if atoms.is_empty() {
        return Err(Error::InvalidParameter {
            name: "spec",
            reason: "no atoms".into(),
        });
    }
    let d = atoms[0].0.dim();
    if d > 2 {
        return Err(Error::Unsupported(format!(
            "approximation constant only in d ≤ 2, got d = {d}"
        )));
    }
    let log_w: Vec<f64> = atoms.iter().map(|(_, w)| w.ln()).collect();
    let bounds = grid_bounds(&atoms, 10.0);
    tensor_trapezoid(&bounds, nodes, |x| {
        let logs: Vec<f64> = atoms.iter().map(|(g, _)| g.log_density_at(x)).collect();
        let num: Vec<f64> = logs.iter().zip(&log_w).map(|(l, lw)| lw + 2.0 * l).collect();
        let den: Vec<f64> = logs.iter().zip(&log_w).map(|(l, lw)| lw + l).collect();
        (log_sum_exp(&num) - log_sum_exp(&den)).exp()
    })
}

/// `KL(ν | π) = ∫ ν log(ν/π)` in `d = 1` by trapezoid quadrature on `[lo, hi]`.
/// Both densities must be normalized for the result to be a true KL.
pub fn kl_quadrature_1d<M, T>(mix: &M, target: &T, lo: f64, hi: f64, nodes: usize) -> Result<f64>
where
    M: VariationalMixture + ?Sized,
    T: Target + ?Sized,
{
    check_dim(1, mix.dim())?;
    check_dim(1, target.dim())?;
    tensor_trapezoid(&[(lo, hi)], nodes, |x| {
        let lq = mix.log_density_at(x);
        let q = lq.exp();
        if q == 0.0 {
            0.0
        } else {
            q * (lq - target.log_density(x))
        }
    })
}
