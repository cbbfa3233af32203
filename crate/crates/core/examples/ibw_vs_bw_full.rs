//! Isotropic IBW against full-covariance Bures-Wasserstein SGD on the same
//! target, initialization and budget.

use std::time::Instant;

use migvi::optim::{init_mixture, run, Algorithm, OptimizerConfig, VariationalState};
use migvi::rng::{Purpose, SeedStream};
use migvi::targets::{random_mog_spec, CovarianceKind, GaussianMixtureTarget};

fn main() -> migvi::Result<()> {
    let d = 5;
    let s = 100.0 / d as f64;
    let mut rng = SeedStream::new(7).substream(Purpose::Target, 0, 0);
    let target = GaussianMixtureTarget::new(random_mog_spec(d, s, 5.0, 5, CovarianceKind::Full, &mut rng))?;
    let init = init_mixture(d, 15, s, 10.0, &mut SeedStream::new(0).substream(Purpose::Init, 0, 0))?;
    for alg in [Algorithm::Ibw, Algorithm::BwFull] {
        let cfg = OptimizerConfig {
            kl_every: 250,
            ..OptimizerConfig::new(alg, 1e-2 / d as f64, 1000)
        };
        let started = Instant::now();
        let trace = run(
            VariationalState::for_algorithm(init.clone(), alg),
            &target,
            &cfg,
            SeedStream::new(0),
        )?;
        let mut per_step = trace.step_ms.clone();
        per_step.sort_by(f64::total_cmp);
        println!(
            "{:<8} final KL {:>8.3}  median step {:.3} ms  total {:.2?}",
            alg.name(),
            trace.final_kl().unwrap_or(f64::NAN),
            per_step[per_step.len() / 2],
            started.elapsed()
        );
    }
    Ok(())
}
