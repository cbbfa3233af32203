use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::Target;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Central finite differences of `f` at `x`, step `h·max(1, |x_i|)` per coordinate.
pub fn finite_difference_gradient<F>(f: F, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let step = h * x[i].abs().max(1.0);
        let orig = xp[i];
        xp[i] = orig + step;
        let up = f(&xp);
        xp[i] = orig - step;
        let down = f(&xp);
        xp[i] = orig;
        g[i] = (up - down) / (2.0 * step);
    }
    g
}

/// Largest coordinatewise relative error between two gradients.
///
/// Each coordinate is compared relative to its own magnitude, with the
/// denominator floored at `1e-3 · max|g|` so vanishing coordinates are
/// judged on the scale of the whole vector.
pub fn gradient_mismatch(analytic: &DVector<f64>, reference: &DVector<f64>) -> f64 {
    let scale = analytic.amax().max(reference.amax());
    let floor = (1e-3 * scale).max(1e-12);
    analytic
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub points_checked: usize,
    pub worst_relative_error: f64,
}

/// Finite-difference check of `grad_log_density` at up to `points` random
/// points `x = center + scale·z`, skipping points the target flags as non-smooth.
pub fn self_test<T: Target + ?Sized>(
    target: &T,
    points: usize,
    center: &DVector<f64>,
    scale: f64,
    rel_tol: f64,
    rng: &mut Rng,
) -> Result<GradientCheck> {
    let d = target.dim();
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut tries = 0;
    while checked < points && tries < points * 100 {
        tries += 1;
        let x = center + DVector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        if !target.is_smooth_at(&x) {
            continue;
        }
        let g = target.grad_log_density(&x);
        let fd = finite_difference_gradient(|y| target.log_density(y), &x, 1e-5);
        let err = gradient_mismatch(&g, &fd);
        if !err.is_finite() || err > rel_tol {
            return Err(Error::InvalidParameter {
                name: "target",
                reason: format!(
                    "gradient self-test failed at {:?}: relative error {err:e} > {rel_tol:e}",
                    x.as_slice()
                ),
            });
        }
        worst = worst.max(err);
        checked += 1;
    }
    if checked == 0 {
        return Err(Error::InvalidParameter {
            name: "target",
            reason: "gradient self-test found no smooth test point".into(),
        });
    }
    Ok(GradientCheck {
        points_checked: checked,
        worst_relative_error: worst,
    })
}
