//! Bayesian logistic regression: MD on a 5-component mixture, then
//! model-averaged predictions on the held-out half of the data.

use std::path::Path;

use migvi::rng::{Purpose, SeedStream};
use migvi::runner::{build_problem, evaluate_predictive, run_experiment, ExperimentConfig};

fn main() -> migvi::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let cfg = ExperimentConfig::from_toml_str(&std::fs::read_to_string(dir.join("logistic.toml"))?, &dir)?;
    let run = run_experiment(&cfg)?;
    if let Some(e) = &run.trace.error {
        println!("run stopped early: {e}");
    }
    let task = build_problem(&cfg)?.task.expect("logistic targets carry a test split");
    let mut rng = SeedStream::new(cfg.seed).substream(Purpose::Predictive, 0, 0);
    let report = evaluate_predictive(&run.final_state, &task, 100, &mut rng)?;
    println!("component variances {:.4?}", run.final_state.variances());
    println!(
        "test accuracy {:.3}  mean log predictive {:.4}",
        report.accuracy.unwrap_or(f64::NAN),
        report.log_likelihood
    );
    Ok(())
}
