//! Regression with a one-hidden-layer Bayesian neural network.

use std::path::Path;

use migvi::rng::{Purpose, SeedStream};
use migvi::runner::{build_problem, evaluate_predictive, run_experiment, ExperimentConfig};

fn main() -> migvi::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let cfg = ExperimentConfig::from_toml_str(&std::fs::read_to_string(dir.join("bnn.toml"))?, &dir)?;
    let run = run_experiment(&cfg)?;
    let task = build_problem(&cfg)?.task.expect("bnn targets carry a test split");
    let mut rng = SeedStream::new(cfg.seed).substream(Purpose::Predictive, 0, 0);
    let report = evaluate_predictive(&run.final_state, &task, 100, &mut rng)?;
    println!(
        "{} parameters, {} components",
        run.final_state.dim(),
        run.final_state.len()
    );
    println!(
        "test RMSE {:.4}  mean log predictive {:.4}",
        report.rmse.unwrap_or(f64::NAN),
        report.log_likelihood
    );
    Ok(())
}
