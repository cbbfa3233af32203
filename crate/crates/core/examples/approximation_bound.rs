//! Best-of-5 KL of MD fits to a two-atom 1-D mixture against `C²·(log N + 1)/N`.

use migvi::geometry::{approx_bound_constant, kl_quadrature_1d};
use migvi::optim::{init_mixture, run, Algorithm, OptimizerConfig, VariationalState};
use migvi::rng::{Purpose, SeedStream};
use migvi::targets::{GaussianMixtureTarget, GaussianMixtureTargetSpec};
use migvi::IsotropicGaussian;

fn main() -> migvi::Result<()> {
    let atoms = [
        IsotropicGaussian::from_slice(&[-2.0], 1.0)?,
        IsotropicGaussian::from_slice(&[2.0], 1.0)?,
    ];
    let spec = GaussianMixtureTargetSpec::uniform_isotropic(&atoms);
    let c2 = approx_bound_constant(&spec, 4001)?;
    let target = GaussianMixtureTarget::new(spec)?;
    println!("C² = {c2:.4}");
    for n in [1usize, 2, 4, 8, 16] {
        let mut best = f64::INFINITY;
        for seed in 0..5 {
            let init = init_mixture(
                1,
                n,
                4.0,
                1.0,
                &mut SeedStream::new(seed).substream(Purpose::Init, n as u64, 0),
            )?;
            let cfg = OptimizerConfig {
                kl_every: 3000,
                ..OptimizerConfig::new(Algorithm::Md, 0.05, 3000)
            };
            let trace = run(VariationalState::Isotropic(init), &target, &cfg, SeedStream::new(seed))?;
            let fit = trace.final_state.isotropic_projection();
            best = best.min(kl_quadrature_1d(&fit, &target, -32.0, 32.0, 20_001)?);
        }
        println!(
            "N={n:>2}  KL {best:.3e}  bound {:.4}",
            c2 * ((n as f64).ln() + 1.0) / n as f64
        );
    }
    Ok(())
}
