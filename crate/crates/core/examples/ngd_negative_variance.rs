//! Natural gradient descent from a wide initialization against a narrow
//! target: the inverse-variance update goes negative and the run stops.

use migvi::optim::{init_mixture, run, Algorithm, OptimizerConfig, VariationalState};
use migvi::rng::{Purpose, SeedStream};
use migvi::targets::GaussianMixtureTarget;

fn main() -> migvi::Result<()> {
    let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0, 0.0], 0.1)?;
    for seed in 0..5 {
        let init = init_mixture(
            2,
            5,
            20.0,
            1.0,
            &mut SeedStream::new(seed).substream(Purpose::Init, 3, 0),
        )?;
        for alg in [Algorithm::Ngd, Algorithm::Md] {
            let trace = run(
                VariationalState::Isotropic(init.clone()),
                &target,
                &OptimizerConfig::new(alg, 0.1, 500),
                SeedStream::new(seed),
            )?;
            let outcome = trace.error.map_or("completed".to_string(), |e| e.to_string());
            println!(
                "seed {seed} {:<3} after {:>3} iterations: {outcome}",
                alg.name(),
                trace.iterations_completed
            );
        }
    }
    Ok(())
}
