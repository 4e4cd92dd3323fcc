//! Config files: flat key-value text with dotted sections (standard TOML
//! subset). Every field has a default; unknown keys are rejected so typos
//! surface as config errors, not silently ignored knobs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversarial::{AdvConfig, AdvMethod, NormOrder};
use crate::data::{
    load_idx, rescale_and_downsample, DataSource, ImageSource, MixtureKind, MixtureSpec,
};
use crate::engine::{EvalConfig, GeneratorLoss, TrainConfig};

use super::RunnerError;

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    #[serde(default = "d_kind")]
    pub kind: String,
    #[serde(default = "d_modes")]
    pub n_modes: usize,
    #[serde(default = "d_extent")]
    pub extent: f64,
    #[serde(default = "d_sigma")]
    pub sigma: f64,
    #[serde(default = "d_seed")]
    pub seed: u64,
    /// IDX file path (kind = "idx" only).
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default = "d_target")]
    pub target_h: usize,
    #[serde(default = "d_target")]
    pub target_w: usize,
}

fn d_kind() -> String {
    "ring".into()
}
fn d_modes() -> usize {
    8
}
fn d_extent() -> f64 {
    0.8
}
fn d_sigma() -> f64 {
    0.016
}
fn d_seed() -> u64 {
    7
}
fn d_target() -> usize {
    14
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            kind: d_kind(),
            n_modes: d_modes(),
            extent: d_extent(),
            sigma: d_sigma(),
            seed: d_seed(),
            path: None,
            target_h: d_target(),
            target_w: d_target(),
        }
    }
}

impl DatasetSection {
    pub fn is_image(&self) -> bool {
        self.kind == "idx"
    }

    pub fn mixture_spec(&self) -> Result<Option<MixtureSpec>, RunnerError> {
        let kind = match self.kind.as_str() {
            "ring" => MixtureKind::Ring,
            "grid" => MixtureKind::Grid,
            "swiss_roll" => MixtureKind::SwissRoll,
            "idx" => return Ok(None),
            other => {
                return Err(RunnerError::Config(format!(
                    "dataset.kind '{other}' is not one of ring|grid|swiss_roll|idx"
                )))
            }
        };
        let spec = MixtureSpec {
            kind,
            n_modes: self.n_modes,
            extent: self.extent,
            sigma: self.sigma,
            seed: self.seed,
        };
        spec.validate()
            .map_err(|e| RunnerError::Config(format!("dataset: {e}")))?;
        Ok(Some(spec))
    }

    pub fn build(&self) -> Result<Box<dyn DataSource + Send + Sync>, RunnerError> {
        if let Some(spec) = self.mixture_spec()? {
            return Ok(Box::new(spec));
        }
        let path = self.path.as_ref().ok_or_else(|| {
            RunnerError::Config("dataset.kind = 'idx' requires dataset.path".into())
        })?;
        let raw = load_idx(Path::new(path))?;
        let set = rescale_and_downsample(&raw, self.target_h, self.target_w)?;
        Ok(Box::new(ImageSource {
            set,
            seed: self.seed,
        }))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub batch_size: Option<usize>,
    pub latent_dim: Option<usize>,
    pub lr_d: Option<f64>,
    pub lr_g: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub total_iters: Option<u64>,
    pub generator_loss: Option<GeneratorLoss>,
    pub d_steps_per_g: Option<usize>,
    pub g_hidden: Option<Vec<usize>>,
    pub d_hidden: Option<Vec<usize>>,
    pub init: Option<String>,
    pub fresh_z_for_adv: Option<bool>,
    /// Lower lr_d to 5e-5 (two time-scale update rule).
    pub ttur: Option<bool>,
}

impl TrainSection {
    pub fn resolve(&self, is_image: bool) -> TrainConfig {
        let d = TrainConfig::default();
        let mut cfg = TrainConfig {
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            latent_dim: self
                .latent_dim
                .unwrap_or(if is_image { 64 } else { d.latent_dim }),
            lr_d: self.lr_d.unwrap_or(d.lr_d),
            lr_g: self.lr_g.unwrap_or(d.lr_g),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            total_iters: self.total_iters.unwrap_or(d.total_iters),
            generator_loss: self.generator_loss.unwrap_or(d.generator_loss),
            d_steps_per_g: self.d_steps_per_g.unwrap_or(d.d_steps_per_g),
            g_hidden: self.g_hidden.clone().unwrap_or(d.g_hidden),
            d_hidden: self.d_hidden.clone().unwrap_or(d.d_hidden),
            init: self.init.clone().unwrap_or(d.init),
            fresh_z_for_adv: self.fresh_z_for_adv.unwrap_or(d.fresh_z_for_adv),
            seed: 0,
        };
        if self.ttur.unwrap_or(false) && self.lr_d.is_none() {
            cfg.lr_d = 5e-5;
        }
        cfg
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvSection {
    pub method: Option<String>,
    pub epsilon: Option<f64>,
    pub norm: Option<String>,
    pub pgd_steps: Option<usize>,
    pub pgd_step_size: Option<f64>,
    pub pgd_random_init: Option<bool>,
    pub warmup_iters: Option<u64>,
    /// Warmup as a fraction of total iterations; default 0.05.
    pub warmup_frac: Option<f64>,
    /// "auto" (domain box when the data has one), "none", or explicit
    /// bounds via clip_lo/clip_hi.
    pub clip: Option<String>,
    pub clip_lo: Option<f64>,
    pub clip_hi: Option<f64>,
    pub adv_on_fake: Option<bool>,
}

impl AdvSection {
    pub fn resolve(
        &self,
        dataset: &DatasetSection,
        total_iters: u64,
    ) -> Result<AdvConfig, RunnerError> {
        let method = match self.method.as_deref().unwrap_or("fgsm") {
            "none" => AdvMethod::None,
            "fgsm" => AdvMethod::Fgsm,
            "pgd" => AdvMethod::Pgd,
            "gaussian" => AdvMethod::Gaussian,
            "double_update" => AdvMethod::DoubleUpdate,
            other => {
                return Err(RunnerError::Config(format!(
                    "adv.method '{other}' is not one of none|fgsm|pgd|gaussian|double_update"
                )))
            }
        };
        let epsilon = match self.epsilon {
            Some(e) => e,
            None => default_epsilon(dataset)?,
        };
        let norm_order = match self.norm.as_deref().unwrap_or("inf") {
            "inf" => NormOrder::LInf,
            "2" => NormOrder::L2,
            other => {
                return Err(RunnerError::Config(format!(
                    "adv.norm '{other}' is not one of inf|2"
                )))
            }
        };
        let warmup_iters = match (self.warmup_iters, self.warmup_frac) {
            (Some(it), _) => it,
            (None, Some(frac)) => (frac * total_iters as f64).round() as u64,
            (None, None) => (0.05 * total_iters as f64).round() as u64,
        };
        let (clip_lo, clip_hi) = match self.clip.as_deref() {
            Some("none") => (None, None),
            None | Some("auto") => {
                if self.clip_lo.is_some() || self.clip_hi.is_some() {
                    (self.clip_lo, self.clip_hi)
                } else if dataset.is_image() {
                    (Some(-1.0), Some(1.0))
                } else {
                    (None, None)
                }
            }
            Some(other) => {
                return Err(RunnerError::Config(format!(
                    "adv.clip '{other}' is not one of auto|none (or set clip_lo/clip_hi)"
                )))
            }
        };
        let cfg = AdvConfig {
            method,
            epsilon,
            norm_order,
            pgd_steps: self.pgd_steps.unwrap_or(4),
            pgd_step_size: self.pgd_step_size,
            pgd_random_init: self.pgd_random_init.unwrap_or(true),
            warmup_iters,
            clip_lo,
            clip_hi,
            adv_on_fake: self.adv_on_fake.unwrap_or(false),
        };
        cfg.validate(total_iters)
            .map_err(|e| RunnerError::Config(format!("adv: {e}")))?;
        Ok(cfg)
    }
}

/// Default ε in data units: 0.01 × per-dimension std for 2-D mixtures, the
/// literal 1/255 for images already rescaled to [−1, 1].
pub fn default_epsilon(dataset: &DatasetSection) -> Result<f64, RunnerError> {
    match dataset.mixture_spec()? {
        Some(spec) => Ok(0.01 * spec.per_dim_std()),
        None => Ok(1.0 / 255.0),
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub cadence: Option<u64>,
    pub points: Option<usize>,
    pub attack_epsilon: Option<f64>,
}

impl EvalSection {
    pub fn resolve(&self) -> EvalConfig {
        let d = EvalConfig::default();
        EvalConfig {
            cadence: self.cadence.unwrap_or(d.cadence),
            points: self.points.unwrap_or(d.points),
            attack_epsilon: self.attack_epsilon,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub values: Vec<toml::Value>,
    #[serde(default = "d_last_k")]
    pub last_k: usize,
}

fn d_last_k() -> usize {
    5
}

/// Parsed sweep axis with typed values.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Epsilon(Vec<f64>),
    Method(Vec<AdvMethod>),
    PgdSteps(Vec<usize>),
}

impl SweepSection {
    pub fn parse_axis(&self) -> Result<SweepAxis, RunnerError> {
        if self.values.is_empty() {
            return Err(RunnerError::Config("sweep.values must be nonempty".into()));
        }
        match self.axis.as_str() {
            "epsilon" => {
                let vals = self
                    .values
                    .iter()
                    .map(|v| {
                        v.as_float().or(v.as_integer().map(|i| i as f64)).ok_or_else(|| {
                            RunnerError::Config(format!("sweep value {v} is not a number"))
                        })
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                if vals.iter().any(|&e| e < 0.0) {
                    return Err(RunnerError::Config("epsilon values must be >= 0".into()));
                }
                Ok(SweepAxis::Epsilon(vals))
            }
            "method" => {
                let vals = self
                    .values
                    .iter()
                    .map(|v| {
                        let s = v.as_str().ok_or_else(|| {
                            RunnerError::Config(format!("sweep value {v} is not a string"))
                        })?;
                        Ok(match s {
                            "none" => AdvMethod::None,
                            "fgsm" => AdvMethod::Fgsm,
                            "pgd" => AdvMethod::Pgd,
                            "gaussian" => AdvMethod::Gaussian,
                            "double_update" => AdvMethod::DoubleUpdate,
                            other => {
                                return Err(RunnerError::Config(format!(
                                    "unknown method '{other}' in sweep"
                                )))
                            }
                        })
                    })
                    .collect::<Result<Vec<_>, RunnerError>>()?;
                Ok(SweepAxis::Method(vals))
            }
            "pgd_steps" => {
                let vals = self
                    .values
                    .iter()
                    .map(|v| {
                        v.as_integer()
                            .filter(|&i| i >= 1)
                            .map(|i| i as usize)
                            .ok_or_else(|| {
                                RunnerError::Config(format!(
                                    "sweep value {v} is not a positive integer"
                                ))
                            })
                    })
                    .collect::<Result<Vec<usize>, _>>()?;
                Ok(SweepAxis::PgdSteps(vals))
            }
            other => Err(RunnerError::Config(format!(
                "sweep.axis '{other}' is not one of epsilon|method|pgd_steps"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    pub checkpoint: Option<String>,
    #[serde(default = "t_p")]
    pub p: String,
    #[serde(default = "t_eps")]
    pub epsilons: Vec<f64>,
    #[serde(default = "t_grid")]
    pub grid_n: usize,
    #[serde(default = "t_points")]
    pub points: usize,
}

fn t_p() -> String {
    "both".into()
}
fn t_eps() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}
fn t_grid() -> usize {
    41
}
fn t_points() -> usize {
    20
}

impl Default for TheorySection {
    fn default() -> Self {
        TheorySection {
            checkpoint: None,
            p: t_p(),
            epsilons: t_eps(),
            grid_n: t_grid(),
            points: t_points(),
        }
    }
}

/// The on-disk config file: every section optional, every field defaulted.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub out_dir: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub adv: AdvSection,
    #[serde(default)]
    pub eval: EvalSection,
    pub sweep: Option<SweepSection>,
    pub theory: Option<TheorySection>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, RunnerError> {
        toml::from_str(text).map_err(|e| RunnerError::Config(format!("config parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunnerError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }
}

/// A fully resolved experiment: validated configs plus output location.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub format_version: String,
    pub dataset: DatasetSection,
    pub train: TrainConfig,
    pub adv: AdvConfig,
    pub eval: EvalConfig,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl ConfigFile {
    /// Resolve every section. The output directory obeys, in order: the
    /// explicit CLI override, the `ASGAN_OUT_DIR` environment variable (the
    /// one permitted env override), then the config value.
    pub fn resolve(&self, out_override: Option<PathBuf>) -> Result<ExperimentConfig, RunnerError> {
        let out_dir = out_override
            .or_else(|| std::env::var("ASGAN_OUT_DIR").ok().map(PathBuf::from))
            .or_else(|| self.out_dir.clone().map(PathBuf::from))
            .ok_or_else(|| {
                RunnerError::Config(
                    "no output directory: set out_dir, --out, or ASGAN_OUT_DIR".into(),
                )
            })?;
        let seeds = self.seeds.clone().unwrap_or_else(default_seeds);
        if seeds.is_empty() {
            return Err(RunnerError::Config("seeds must be nonempty".into()));
        }
        let train = self.train.resolve(self.dataset.is_image());
        train
            .validate()
            .map_err(|e| RunnerError::Config(format!("train: {e}")))?;
        let adv = self.adv.resolve(&self.dataset, train.total_iters)?;
        let eval = self.eval.resolve();
        if eval.cadence == 0 {
            return Err(RunnerError::Config("eval.cadence must be >= 1".into()));
        }
        self.dataset.build()?; // surface dataset errors before any compute
        Ok(ExperimentConfig {
            format_version: "asgan_config_v1".into(),
            dataset: self.dataset.clone(),
            train,
            adv,
            eval,
            seeds,
            out_dir,
            workers: self.workers.unwrap_or(1).max(1),
        })
    }
}
