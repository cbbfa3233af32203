//! Experiment orchestration: config, target construction, the optimization
//! run and its output files.
//!
//! A run with prefix `out` writes
//!
//! * `out.trace.csv`: header `iter,kl_estimate,wall_ms`, one row per recorded iteration;
//! * `out.final.json`: the final mixture state (`d`, `n`, `means`, `variances`);
//! * `out.meta.json`: config echo, config hash, seed, version and run outcome.
//!
//! With `MIGVI_THREADS=1` the `wall_ms` column is written as `0` so that
//! identical configs produce byte-identical files.

mod cli;
mod config;
mod predictive;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::mixture::MixtureState;
use crate::optim::{init_mixture, run, OptimizerConfig, RunTrace, VariationalState};
use crate::rng::{Purpose, SeedStream};
use crate::targets::data::Dataset;
use crate::targets::{
    random_mog_spec, BnnRegressionSpec, BnnTarget, FunnelTarget, GaussianMixtureTarget, GaussianMixtureTargetSpec,
    LogisticRegressionData, LogisticTarget, SinhArcsinhTarget, Target,
};

pub use cli::cli_main;
pub use config::{load_config, ExperimentConfig, InitConfig, OptimConfig, TargetConfig};
pub use predictive::{
    evaluate_predictive, MetricReport, PredictiveModel, PredictiveTask, TestLabels, DEFAULT_PREDICTIVE_SAMPLES,
};

pub const THREADS_ENV: &str = "MIGVI_THREADS";
pub const VERSION: &str = concat!("migvi ", env!("CARGO_PKG_VERSION"));

/// A built target together with held-out data when the target is a Bayesian model.
pub struct Problem {
    pub target: Box<dyn Target>,
    pub task: Option<PredictiveTask>,
}

fn split(ds: &Dataset, ratio: f64, standardize: bool, stream: SeedStream) -> Result<(Dataset, Dataset)> {
    let mut rng = stream.substream(Purpose::Data, 0, 0);
    let (mut train, mut test) = ds.train_test_split(ratio, &mut rng)?;
    if standardize {
        train.standardize_with(&mut test);
    }
    Ok((train, test))
}

/// Constructs the target of `cfg`; data splits and random targets are seeded from `cfg.seed`.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let stream = SeedStream::new(cfg.seed);
    let plain = |t: Box<dyn Target>| Ok(Problem { target: t, task: None });
    match &cfg.target {
        TargetConfig::Mog {
            d,
            s_tg,
            r_tg,
            n_tg,
            covariance,
            seed,
        } => {
            let mut rng = SeedStream::new(seed.unwrap_or(cfg.seed)).substream(Purpose::Target, 0, 0);
            let spec = random_mog_spec(*d, *s_tg, *r_tg, *n_tg, *covariance, &mut rng);
            plain(Box::new(GaussianMixtureTarget::new(spec)?))
        }
        TargetConfig::Mixture {
            means,
            covariances,
            weights,
        } => plain(Box::new(GaussianMixtureTarget::new(GaussianMixtureTargetSpec {
            means: means.clone(),
            covariances: covariances.clone(),
            weights: weights.clone(),
        })?)),
        TargetConfig::Gaussian { mean, variance } => {
            plain(Box::new(GaussianMixtureTarget::isotropic_gaussian(mean, *variance)?))
        }
        TargetConfig::Funnel { sigma_sq } => plain(Box::new(FunnelTarget::new(*sigma_sq)?)),
        TargetConfig::SinhArcsinh {
            skew,
            tail,
            base_mean,
            base_cov,
        } => plain(Box::new(SinhArcsinhTarget::new(*skew, *tail, *base_mean, *base_cov)?)),
        TargetConfig::Logistic {
            data,
            prior_var,
            train_ratio,
            standardize,
        } => {
            let ds = Dataset::from_csv(data)?;
            let classes = ds.distinct_labels();
            let (train, test) = split(&ds, *train_ratio, *standardize, stream)?;
            let y_train = train.class_indices(&classes)?;
            let target = LogisticTarget::new(LogisticRegressionData::new(
                train.features,
                y_train,
                classes.len(),
                *prior_var,
            )?);
            Ok(Problem {
                target: Box::new(target.clone()),
                task: Some(PredictiveTask {
                    model: PredictiveModel::Logistic(target),
                    labels: TestLabels::Classes(test.class_indices(&classes)?),
                    features: test.features,
                }),
            })
        }
        TargetConfig::Bnn {
            data,
            hidden,
            noise_var,
            prior_var,
            train_ratio,
            standardize,
        } => {
            let ds = Dataset::from_csv(data)?;
            let (train, test) = split(&ds, *train_ratio, *standardize, stream)?;
            let target = BnnTarget::new(BnnRegressionSpec {
                hidden: *hidden,
                inputs: train.features,
                targets: train.labels,
                noise_var: *noise_var,
                prior_var: *prior_var,
            })?;
            Ok(Problem {
                target: Box::new(target.clone()),
                task: Some(PredictiveTask {
                    model: PredictiveModel::Bnn(target),
                    features: test.features,
                    labels: TestLabels::Values(test.labels),
                }),
            })
        }
    }
}

/// Optimizer settings of an experiment.
pub fn optimizer_config(cfg: &ExperimentConfig, parallel: bool) -> OptimizerConfig {
    let o = &cfg.optim;
    OptimizerConfig {
        algorithm: o.algorithm,
        step_size: o.step_size,
        iterations: o.iterations,
        estimator: EstimatorConfig {
            grad_batch: o.grad_batch,
            kl_batch: o.kl_batch,
            parallel,
        },
        variance_floor: o.variance_floor,
        md_exponent_clamp: o.md_exponent_clamp,
        kl_every: o.kl_every,
        gradients: o.gradients,
        kl: o.kl,
    }
}

/// Parses `MIGVI_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub threads: Option<usize>,
    pub iterations_completed: usize,
    pub md_clamp_events: usize,
    pub error: Option<String>,
    pub predictive: Option<MetricReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub trace: PathBuf,
    pub final_state: PathBuf,
    pub meta: PathBuf,
}

impl OutputPaths {
    pub fn new(prefix: &Path) -> Self {
        let with = |suffix: &str| {
            let mut s = OsString::from(prefix.as_os_str());
            s.push(suffix);
            PathBuf::from(s)
        };
        Self {
            trace: with(".trace.csv"),
            final_state: with(".final.json"),
            meta: with(".meta.json"),
        }
    }
}

pub struct ExperimentRun {
    pub trace: RunTrace,
    /// Final state as written to `final.json` (isotropic projection for BW-full).
    pub final_state: MixtureState,
    pub meta: RunMeta,
    pub paths: OutputPaths,
}

/// Writes the trace CSV; `wall_ms` is written as `0` when `zero_wall` is set.
pub fn write_trace_csv(trace: &RunTrace, path: &Path, zero_wall: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["iter", "kl_estimate", "wall_ms"]).map_err(io)?;
    for row in &trace.rows {
        let wall = if zero_wall { 0.0 } else { row.wall_ms };
        w.write_record([row.iter.to_string(), row.kl_estimate.to_string(), wall.to_string()])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Runs `cfg` with the parallelism cap from `MIGVI_THREADS`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    run_experiment_with(cfg, threads_from_env()?)
}

/// Runs `cfg` and writes its output files. `threads = Some(1)` runs serially
/// and zeroes the wall-time column. Errors raised during the iterations are
/// recorded in the trace and the meta file; all outputs are still written.
pub fn run_experiment_with(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentRun> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    let stream = SeedStream::new(cfg.seed);
    let d = problem.target.dim();
    let mut init_rng = stream.substream(Purpose::Init, 0, 0);
    let initial = init_mixture(d, cfg.init.n, cfg.init.s, cfg.init.r, &mut init_rng)?;
    let opt = optimizer_config(cfg, threads != Some(1));
    let state = VariationalState::for_algorithm(initial, opt.algorithm);
    let trace = match threads {
        Some(k) if k > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run(state, &problem.target, &opt, stream))?,
        _ => run(state, &problem.target, &opt, stream)?,
    };
    let final_state = trace.final_state.isotropic_projection();
    let predictive = match &problem.task {
        Some(task) => {
            let mut rng = stream.substream(Purpose::Predictive, 0, 0);
            Some(evaluate_predictive(
                &final_state,
                task,
                DEFAULT_PREDICTIVE_SAMPLES,
                &mut rng,
            )?)
        }
        None => None,
    };
    let meta = RunMeta {
        version: VERSION.into(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        threads,
        iterations_completed: trace.iterations_completed,
        md_clamp_events: trace.md_clamp_events,
        error: trace.error.as_ref().map(|e| e.to_string()),
        predictive,
    };
    let paths = OutputPaths::new(&cfg.out);
    if let Some(dir) = paths.trace.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_trace_csv(&trace, &paths.trace, threads == Some(1))?;
    write_text(&paths.final_state, &final_state.to_json())?;
    write_text(
        &paths.meta,
        &serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?,
    )?;
    Ok(ExperimentRun {
        trace,
        final_state,
        meta,
        paths,
    })
}
