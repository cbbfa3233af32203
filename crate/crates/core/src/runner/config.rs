use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{DEFAULT_GRAD_BATCH, DEFAULT_KL_BATCH};
use crate::mixture::VARIANCE_FLOOR;
use crate::optim::{Algorithm, GradientMode, KlEvaluation, DEFAULT_KL_EVERY, DEFAULT_MD_EXPONENT_CLAMP};
use crate::targets::{Covariance, CovarianceKind};

fn default_out() -> PathBuf {
    PathBuf::from("migvi_run")
}

fn default_train_ratio() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

/// Benchmark target selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    /// Random Gaussian mixture: means in `[−s_tg, s_tg]^d`, covariance scale `r_tg`, `n_tg` components.
    Mog {
        d: usize,
        s_tg: f64,
        r_tg: f64,
        n_tg: usize,
        #[serde(default)]
        covariance: CovarianceKind,
        /// Seed of the target draw; defaults to the experiment seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Explicit Gaussian mixture.
    Mixture {
        means: Vec<Vec<f64>>,
        covariances: Vec<Covariance>,
        weights: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        variance: f64,
    },
    Funnel {
        sigma_sq: f64,
    },
    SinhArcsinh {
        skew: [f64; 2],
        tail: [f64; 2],
        base_mean: [f64; 2],
        base_cov: [[f64; 2]; 2],
    },
    /// Bayesian logistic regression on a CSV file with a `label` column.
    Logistic {
        data: PathBuf,
        prior_var: f64,
        #[serde(default = "default_train_ratio")]
        train_ratio: f64,
        #[serde(default = "default_true")]
        standardize: bool,
    },
    /// One-hidden-layer ReLU regression network on a CSV file with a `label` column.
    Bnn {
        data: PathBuf,
        hidden: usize,
        noise_var: f64,
        prior_var: f64,
        #[serde(default = "default_train_ratio")]
        train_ratio: f64,
        #[serde(default = "default_true")]
        standardize: bool,
    },
}

impl TargetConfig {
    fn data_path_mut(&mut self) -> Option<&mut PathBuf> {
        match self {
            TargetConfig::Logistic { data, .. } | TargetConfig::Bnn { data, .. } => Some(data),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    /// Number of mixture components.
    pub n: usize,
    /// Means are drawn uniformly on `[−s, s]^d`.
    pub s: f64,
    /// Initial variance of every component.
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimConfig {
    pub algorithm: Algorithm,
    pub step_size: f64,
    pub iterations: usize,
    #[serde(default = "OptimConfig::default_grad_batch")]
    pub grad_batch: usize,
    #[serde(default = "OptimConfig::default_kl_batch")]
    pub kl_batch: usize,
    #[serde(default = "OptimConfig::default_kl_every")]
    pub kl_every: usize,
    #[serde(default = "OptimConfig::default_variance_floor")]
    pub variance_floor: f64,
    #[serde(default = "OptimConfig::default_md_clamp")]
    pub md_exponent_clamp: f64,
    #[serde(default)]
    pub gradients: GradientMode,
    #[serde(default)]
    pub kl: KlEvaluation,
}

impl OptimConfig {
    fn default_grad_batch() -> usize {
        DEFAULT_GRAD_BATCH
    }
    fn default_kl_batch() -> usize {
        DEFAULT_KL_BATCH
    }
    fn default_kl_every() -> usize {
        DEFAULT_KL_EVERY
    }
    fn default_variance_floor() -> f64 {
        VARIANCE_FLOOR
    }
    fn default_md_clamp() -> f64 {
        DEFAULT_MD_EXPONENT_CLAMP
    }
}

/// One experiment: target, initialization, optimizer and output prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output files are `<out>.trace.csv`, `<out>.final.json` and `<out>.meta.json`.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub target: TargetConfig,
    pub init: InitConfig,
    pub optim: OptimConfig,
}

fn field_error(field: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {reason}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_error(field, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses TOML text. Relative data paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(p) = cfg.target.data_path_mut() {
            if p.is_relative() {
                *p = base_dir.join(&p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let o = &self.optim;
        positive("optim.step_size", o.step_size)?;
        if o.iterations == 0 {
            return Err(field_error("optim.iterations", "must be at least 1"));
        }
        for (name, v) in [
            ("optim.grad_batch", o.grad_batch),
            ("optim.kl_batch", o.kl_batch),
            ("optim.kl_every", o.kl_every),
        ] {
            if v == 0 {
                return Err(field_error(name, "must be at least 1"));
            }
        }
        if !(o.variance_floor >= VARIANCE_FLOOR) {
            return Err(field_error(
                "optim.variance_floor",
                format!("must be at least {VARIANCE_FLOOR:e}"),
            ));
        }
        positive("optim.md_exponent_clamp", o.md_exponent_clamp)?;
        if self.init.n == 0 {
            return Err(field_error("init.n", "must be at least 1"));
        }
        if !(self.init.s >= 0.0 && self.init.s.is_finite()) {
            return Err(field_error(
                "init.s",
                format!("must be finite and non-negative, got {}", self.init.s),
            ));
        }
        positive("init.r", self.init.r)?;
        match &self.target {
            TargetConfig::Mog {
                d, s_tg, r_tg, n_tg, ..
            } => {
                if *d == 0 || *n_tg == 0 {
                    return Err(field_error("target.d/n_tg", "must be at least 1"));
                }
                if !(*s_tg >= 0.0) {
                    return Err(field_error("target.s_tg", "must be non-negative"));
                }
                positive("target.r_tg", *r_tg)?;
            }
            TargetConfig::Gaussian { mean, variance } => {
                if mean.is_empty() {
                    return Err(field_error("target.mean", "must be non-empty"));
                }
                positive("target.variance", *variance)?;
            }
            TargetConfig::Mixture { means, .. } => {
                if means.is_empty() {
                    return Err(field_error("target.means", "must be non-empty"));
                }
            }
            TargetConfig::Funnel { sigma_sq } => positive("target.sigma_sq", *sigma_sq)?,
            TargetConfig::SinhArcsinh { .. } => {}
            TargetConfig::Logistic {
                data,
                prior_var,
                train_ratio,
                ..
            } => {
                positive("target.prior_var", *prior_var)?;
                check_ratio(*train_ratio)?;
                check_exists(data)?;
            }
            TargetConfig::Bnn {
                data,
                hidden,
                noise_var,
                prior_var,
                train_ratio,
                ..
            } => {
                if *hidden == 0 {
                    return Err(field_error("target.hidden", "must be at least 1"));
                }
                positive("target.noise_var", *noise_var)?;
                positive("target.prior_var", *prior_var)?;
                check_ratio(*train_ratio)?;
                check_exists(data)?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn check_ratio(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(field_error(
            "target.train_ratio",
            format!("must lie in (0, 1), got {r}"),
        ))
    }
}

fn check_exists(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(field_error(
            "target.data",
            format!("file not found: {}", path.display()),
        ))
    }
}

/// Reads and validates a config file; relative data paths are taken relative to it.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    ExperimentConfig::from_toml_str(&text, base).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[target]
kind = "gaussian"
mean = [0.0, 1.0]
variance = 2.0

[init]
n = 3
s = 1.0
r = 1.0

[optim]
algorithm = "ibw"
step_size = 0.1
iterations = 20
"#;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml_str(text, Path::new("."))
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.optim.grad_batch, 10);
        assert_eq!(cfg.optim.kl_batch, 1000);
        assert_eq!(cfg.optim.kl_every, 10);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.optim.algorithm, Algorithm::Ibw);
    }

    #[test]
    fn unknown_algorithm_is_rejected() {
        let err = parse(&MINIMAL.replace("\"ibw\"", "\"XYZ\"")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("XYZ") && msg.contains("ibw"), "{msg}");
    }

    #[test]
    fn negative_step_is_rejected() {
        let err = parse(&MINIMAL.replace("step_size = 0.1", "step_size = -0.1")).unwrap_err();
        assert!(err.to_string().contains("optim.step_size"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse(&MINIMAL.replace("n = 3", "n = 3\nwidth = 2")).is_err());
        assert!(parse(&MINIMAL.replace("variance = 2.0", "variance = 2.0\nfoo = 1")).is_err());
        assert!(parse(&format!("bogus = 1\n{MINIMAL}")).is_err());
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let err = parse(&MINIMAL.replace("n = 3", "n = ")).unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn missing_data_file_is_reported() {
        let text = MINIMAL.replace(
            "kind = \"gaussian\"\nmean = [0.0, 1.0]\nvariance = 2.0",
            "kind = \"logistic\"\ndata = \"does/not/exist.csv\"\nprior_var = 100.0",
        );
        assert!(parse(&text).unwrap_err().to_string().contains("target.data"));
    }

    #[test]
    fn hash_is_stable_across_round_trip() {
        let cfg = parse(MINIMAL).unwrap();
        let echoed: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg.hash(), echoed.hash());
        assert_eq!(cfg.hash().len(), 64);
        let other = ExperimentConfig { seed: 1, ..cfg.clone() };
        assert_ne!(cfg.hash(), other.hash());
    }

    #[test]
    fn mog_and_bw_full_parse() {
        let text = MINIMAL
            .replace(
                "kind = \"gaussian\"\nmean = [0.0, 1.0]\nvariance = 2.0",
                "kind = \"mog\"\nd = 2\ns_tg = 8.0\nr_tg = 5.0\nn_tg = 5\ncovariance = \"full\"",
            )
            .replace("\"ibw\"", "\"bw_full\"");
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.optim.algorithm, Algorithm::BwFull);
        assert!(matches!(
            cfg.target,
            TargetConfig::Mog {
                covariance: CovarianceKind::Full,
                ..
            }
        ));
    }
}
