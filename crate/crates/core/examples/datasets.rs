//! Regenerates the CSV files under `examples/data/` used by `logistic.toml` and `bnn.toml`.
//!
//! ```sh
//! cargo run --example datasets
//! ```

use migvi::rng::{Purpose, SeedStream};
use migvi::targets::data::{synthetic_logistic, synthetic_regression, Dataset};

fn main() -> migvi::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    std::fs::create_dir_all(&dir)?;

    let mut rng = SeedStream::new(2024).substream(Purpose::Data, 0, 0);
    let (x, y, _) = synthetic_logistic(200, 10, 2, &mut rng);
    let names = (0..10).map(|i| format!("x{i}")).collect();
    Dataset::new(names, x, y.into_iter().map(|v| v as f64).collect())?.write_csv(dir.join("logistic.csv"))?;

    let (x, y) = synthetic_regression(200, 3, 0.1, &mut rng);
    let names = (0..3).map(|i| format!("x{i}")).collect();
    Dataset::new(names, x, y)?.write_csv(dir.join("regression.csv"))?;

    println!("wrote {}", dir.display());
    Ok(())
}
