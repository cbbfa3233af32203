//! Fits the 2-D five-mode mixture of `mog2d.toml` with N ∈ {1, 5, 10, 20}
//! components and writes `target/migvi/mog2d_n{N}.*` for plotting.

use std::path::Path;

use migvi::runner::{run_experiment, ExperimentConfig};

fn main() -> migvi::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let text = std::fs::read_to_string(dir.join("mog2d.toml"))?;
    let base = ExperimentConfig::from_toml_str(&text, &dir)?;
    for n in [1, 5, 10, 20] {
        let mut cfg = base.clone();
        cfg.init.n = n;
        cfg.out = format!("target/migvi/mog2d_n{n}").into();
        let run = run_experiment(&cfg)?;
        println!(
            "N={n:>2}  final KL estimate {:>8.4}  -> {}",
            run.trace.final_kl().unwrap_or(f64::NAN),
            run.paths.trace.display()
        );
    }
    Ok(())
}
