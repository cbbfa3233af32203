use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::{build_problem, evaluate_predictive, load_config, run_experiment, DEFAULT_PREDICTIVE_SAMPLES};
use crate::error::{Error, Result};
use crate::geometry::{bw_distance_sq_iso, delon_gap_check, kl_closed_form_iso, point_cloud_w2_sq};
use crate::mixture::MixtureState;
use crate::rng::{Purpose, SeedStream};

const EXIT_USAGE: i32 = 1;
const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "migvi",
    version,
    about = "Variational inference with mixtures of isotropic Gaussians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write <out>.trace.csv, <out>.final.json and <out>.meta.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output prefix of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predictive metrics of a saved state on the held-out split of a Bayesian task.
    Eval {
        #[arg(long)]
        state: PathBuf,
        /// Experiment config defining the model and data split.
        #[arg(long)]
        task: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PREDICTIVE_SAMPLES)]
        samples: usize,
        /// Seed of the parameter draws; defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Closed-form distances between two saved states.
    Metrics {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

/// A failure and the exit code it maps to.
struct Failure {
    code: i32,
    error: Error,
}

fn usage(error: Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error,
    }
}

fn runtime(error: Error) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        error,
    }
}

fn read_state(path: &Path) -> std::result::Result<MixtureState, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(Error::Io(format!("{}: {e}", path.display()))))?;
    MixtureState::from_json(&text).map_err(runtime)
}

fn print_json<T: Serialize>(value: &T) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| runtime(Error::Io(e.to_string())))?;
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct Metrics {
    n: usize,
    d: usize,
    /// Mixing-measure distance `W²_bw`.
    wbw_sq: f64,
    /// `W₂²` between the mean point clouds.
    w2_sq: f64,
    delon_gap: f64,
    delon_bound: f64,
    /// Single-component states only.
    bw_sq: Option<f64>,
    kl_ab: Option<f64>,
    kl_ba: Option<f64>,
}

fn metrics(a: &MixtureState, b: &MixtureState) -> Result<Metrics> {
    let w2_sq = point_cloud_w2_sq(a, b)?;
    let report = delon_gap_check(a, b, w2_sq)?;
    let single = a.len() == 1;
    let pair = |f: fn(&_, &_) -> Result<f64>, x: &MixtureState, y: &MixtureState| -> Result<Option<f64>> {
        if single {
            f(x.component(0), y.component(0)).map(Some)
        } else {
            Ok(None)
        }
    };
    Ok(Metrics {
        n: a.len(),
        d: a.dim(),
        wbw_sq: report.wbw_sq,
        w2_sq,
        delon_gap: report.gap,
        delon_bound: report.bound,
        bw_sq: pair(bw_distance_sq_iso, a, b)?,
        kl_ab: pair(kl_closed_form_iso, a, b)?,
        kl_ba: pair(kl_closed_form_iso, b, a)?,
    })
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Run { config, seed, out } => {
            let mut cfg = load_config(&config).map_err(usage)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            let run = run_experiment(&cfg).map_err(runtime)?;
            eprintln!(
                "wrote {} ({} iterations, final kl_estimate {})",
                run.paths.trace.display(),
                run.trace.iterations_completed,
                run.trace.final_kl().map_or("n/a".into(), |v| v.to_string())
            );
            match run.trace.error {
                Some(e) => Err(runtime(e)),
                None => Ok(()),
            }
        }
        Command::Eval {
            state,
            task,
            samples,
            seed,
        } => {
            let cfg = load_config(&task).map_err(usage)?;
            let problem = build_problem(&cfg).map_err(runtime)?;
            let task = problem.task.ok_or_else(|| {
                usage(Error::Config(
                    "task config has no held-out data (use a logistic or bnn target)".into(),
                ))
            })?;
            let state = read_state(&state)?;
            let mut rng = SeedStream::new(seed.unwrap_or(cfg.seed)).substream(Purpose::Predictive, 0, 0);
            let report = evaluate_predictive(&state, &task, samples, &mut rng).map_err(runtime)?;
            print_json(&report)
        }
        Command::Metrics { a, b } => {
            let (a, b) = (read_state(&a)?, read_state(&b)?);
            print_json(&metrics(&a, &b).map_err(runtime)?)
        }
    }
}

/// Entry point of the `migvi` binary. Returns the process exit code:
/// 0 on success, 1 on usage errors, 2 on runtime errors.
pub fn cli_main<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_states_have_zero_distances() {
        let s = MixtureState::from_parts(&[vec![0.0, 1.0], vec![2.0, -1.0]], &[1.0, 0.5]).unwrap();
        let m = metrics(&s, &s).unwrap();
        assert_eq!((m.wbw_sq, m.w2_sq, m.delon_gap), (0.0, 0.0, 0.0));
        assert!(m.bw_sq.is_none());
        let one = MixtureState::from_parts(&[vec![0.0]], &[2.0]).unwrap();
        let m = metrics(&one, &one).unwrap();
        assert_eq!((m.bw_sq, m.kl_ab, m.kl_ba), (Some(0.0), Some(0.0), Some(0.0)));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            cli_main(["migvi", "run", "--config", "/definitely/missing.toml"]),
            EXIT_USAGE
        );
        assert_eq!(cli_main(["migvi", "frobnicate"]), EXIT_USAGE);
        assert_eq!(cli_main(["migvi", "--help"]), 0);
    }
}
