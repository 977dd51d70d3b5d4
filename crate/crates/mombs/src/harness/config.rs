//! Experiment configuration: TOML-serializable, with defaults for every knob
//! so a minimal file (or none at all) runs out of the box.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{self, BlobSpec, Dataset, LtSpec, NlSpec};
use crate::error::{Error, Result};
use crate::scheduler::SamplerKind;
use crate::seed::derive_seed;

/// Full description of an experiment; one run is `(config, sampler, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Output directory; subcommands fall back to their own default.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_samplers")]
    pub samplers: Vec<SamplerKind>,
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub optim: OptimConfig,
    #[serde(default)]
    pub uncertainty: UncertaintyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seeds: default_seeds(),
            out: None,
            samplers: default_samplers(),
            dataset: DatasetConfig::default(),
            model: ModelConfig::default(),
            optim: OptimConfig::default(),
            uncertainty: UncertaintyConfig::default(),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_samplers() -> Vec<SamplerKind> {
    vec![SamplerKind::Random, SamplerKind::Mombs]
}

impl ExperimentConfig {
    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("need at least one seed".into()));
        }
        if self.samplers.is_empty() {
            return Err(Error::Config("need at least one sampler".into()));
        }
        self.model.validate()?;
        self.optim.validate()?;
        self.uncertainty.validate()?;
        Ok(())
    }
}

/// Which dataset a run trains on. Synthetic kinds derive their generator seed
/// from the run seed unless one is pinned here, so different run seeds see
/// different data while all samplers under one seed share it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetConfig {
    Balanced {
        #[serde(default = "default_classes")]
        num_classes: usize,
        #[serde(default = "default_dim")]
        feature_dim: usize,
        #[serde(default = "default_spacing")]
        mean_spacing: f64,
        #[serde(default = "default_noise_scale")]
        noise_scale: f64,
        #[serde(default = "default_per_class")]
        per_class: usize,
        #[serde(default = "default_test_per_class")]
        test_per_class: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    LongTail {
        #[serde(default = "default_classes")]
        num_classes: usize,
        #[serde(default = "default_dim")]
        feature_dim: usize,
        #[serde(default = "default_spacing")]
        mean_spacing: f64,
        #[serde(default = "default_noise_scale")]
        noise_scale: f64,
        #[serde(default = "default_max_per_class")]
        max_per_class: usize,
        #[serde(default = "default_imbalance")]
        imbalance_ratio: f64,
        #[serde(default = "default_test_per_class")]
        test_per_class: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    Noisy {
        #[serde(default = "default_classes")]
        num_classes: usize,
        #[serde(default = "default_dim")]
        feature_dim: usize,
        #[serde(default = "default_spacing")]
        mean_spacing: f64,
        #[serde(default = "default_noise_scale")]
        noise_scale: f64,
        #[serde(default = "default_per_class")]
        per_class: usize,
        #[serde(default = "default_noise_rate")]
        noise_rate: f64,
        #[serde(default = "default_test_per_class")]
        test_per_class: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    Csv {
        path: PathBuf,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_classes() -> usize {
    10
}
fn default_dim() -> usize {
    8
}
fn default_spacing() -> f64 {
    1.0
}
fn default_noise_scale() -> f64 {
    0.6
}
fn default_per_class() -> usize {
    50
}
fn default_test_per_class() -> usize {
    50
}
fn default_max_per_class() -> usize {
    200
}
fn default_imbalance() -> f64 {
    0.01
}
fn default_noise_rate() -> f64 {
    0.4
}
fn default_test_fraction() -> f64 {
    0.25
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Balanced {
            num_classes: default_classes(),
            feature_dim: default_dim(),
            mean_spacing: default_spacing(),
            noise_scale: default_noise_scale(),
            per_class: default_per_class(),
            test_per_class: default_test_per_class(),
            seed: None,
        }
    }
}

impl DatasetConfig {
    fn data_seed(explicit: Option<u64>, run_seed: u64) -> u64 {
        explicit.unwrap_or_else(|| derive_seed(run_seed, "data", 0))
    }

    /// Builds the `(train, test)` pair for one run seed. Synthetic test sets
    /// are balanced draws from the same blob family as the training set.
    pub fn build(&self, run_seed: u64) -> Result<(Dataset, Dataset)> {
        match self {
            DatasetConfig::Balanced {
                num_classes,
                feature_dim,
                mean_spacing,
                noise_scale,
                per_class,
                test_per_class,
                seed,
            } => {
                let blobs = BlobSpec {
                    num_classes: *num_classes,
                    feature_dim: *feature_dim,
                    mean_spacing: *mean_spacing,
                    noise_scale: *noise_scale,
                    seed: Self::data_seed(*seed, run_seed),
                };
                let train = data::gen_balanced(&blobs, *per_class, 1)?;
                let test = data::gen_balanced(&blobs, *test_per_class, data::TEST_STREAM)?;
                Ok((train, test))
            }
            DatasetConfig::LongTail {
                num_classes,
                feature_dim,
                mean_spacing,
                noise_scale,
                max_per_class,
                imbalance_ratio,
                test_per_class,
                seed,
            } => {
                let blobs = BlobSpec {
                    num_classes: *num_classes,
                    feature_dim: *feature_dim,
                    mean_spacing: *mean_spacing,
                    noise_scale: *noise_scale,
                    seed: Self::data_seed(*seed, run_seed),
                };
                let train = data::gen_longtail(&LtSpec {
                    blobs: blobs.clone(),
                    max_per_class: *max_per_class,
                    imbalance_ratio: *imbalance_ratio,
                })?;
                let test = data::gen_balanced(&blobs, *test_per_class, data::TEST_STREAM)?;
                Ok((train, test))
            }
            DatasetConfig::Noisy {
                num_classes,
                feature_dim,
                mean_spacing,
                noise_scale,
                per_class,
                noise_rate,
                test_per_class,
                seed,
            } => {
                let blobs = BlobSpec {
                    num_classes: *num_classes,
                    feature_dim: *feature_dim,
                    mean_spacing: *mean_spacing,
                    noise_scale: *noise_scale,
                    seed: Self::data_seed(*seed, run_seed),
                };
                let train = data::gen_noisy(&NlSpec {
                    blobs: blobs.clone(),
                    per_class: *per_class,
                    noise_rate: *noise_rate,
                })?;
                let test = data::gen_balanced(&blobs, *test_per_class, data::TEST_STREAM)?;
                Ok((train, test))
            }
            DatasetConfig::Csv { path, test_fraction, seed } => {
                let full = data::load_csv(path)?;
                data::split(&full, *test_fraction, Self::data_seed(*seed, run_seed))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default = "default_hidden")]
    pub hidden_dims: Vec<usize>,
    /// Which hidden activation carries the disturbance.
    #[serde(default)]
    pub perturbation_layer: usize,
}

fn default_hidden() -> Vec<usize> {
    vec![16, 16]
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden_dims: default_hidden(), perturbation_layer: 0 }
    }
}

impl ModelConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(Error::Config("hidden dims must be positive".into()));
        }
        if !self.hidden_dims.is_empty() && self.perturbation_layer >= self.hidden_dims.len() {
            return Err(Error::Config(format!(
                "perturbation layer {} outside the {} hidden layers",
                self.perturbation_layer,
                self.hidden_dims.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub pivot_epoch: PivotEpoch,
    /// Optional step decay; `None` keeps the learning rate constant.
    #[serde(default)]
    pub eta_decay: Option<EtaDecay>,
}

/// Multiply the learning rate by `factor` every `every` epochs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaDecay {
    pub factor: f64,
    pub every: usize,
}

fn default_eta() -> f64 {
    0.1
}
fn default_batch_size() -> usize {
    4
}
fn default_epochs() -> usize {
    40
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            eta: default_eta(),
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            pivot_epoch: PivotEpoch::default(),
        }
    }
}

impl OptimConfig {
    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!(
                "batch size must be >= 2, got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// When the difficulty-aware scheduling switches on: a fixed epoch, a
/// fraction-of-training default, or never.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PivotEpoch {
    At(usize),
    Named(PivotName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PivotName {
    /// A quarter of the way through training.
    Auto,
    /// Random sampling throughout.
    Never,
}

impl Default for PivotEpoch {
    fn default() -> Self {
        PivotEpoch::Named(PivotName::Auto)
    }
}

impl PivotEpoch {
    /// The concrete first difficulty-aware epoch, or `None` for never.
    pub fn resolve(&self, epochs: usize) -> Option<usize> {
        match self {
            PivotEpoch::At(e) => Some(*e),
            PivotEpoch::Named(PivotName::Auto) => Some(epochs / 4),
            PivotEpoch::Named(PivotName::Never) => None,
        }
    }
}

impl fmt::Display for PivotEpoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PivotEpoch::At(e) => write!(f, "{e}"),
            PivotEpoch::Named(PivotName::Auto) => f.write_str("auto"),
            PivotEpoch::Named(PivotName::Never) => f.write_str("never"),
        }
    }
}

impl FromStr for PivotEpoch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(PivotEpoch::Named(PivotName::Auto)),
            "never" | "infinity" | "inf" => Ok(PivotEpoch::Named(PivotName::Never)),
            other => other
                .parse()
                .map(PivotEpoch::At)
                .map_err(|_| Error::Config(format!("bad pivot epoch `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    /// Number of disturbance draws per sample.
    #[serde(default = "default_disturbances")]
    pub disturbances: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

fn default_disturbances() -> usize {
    8
}
fn default_gamma() -> f64 {
    0.3
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self { disturbances: default_disturbances(), gamma: default_gamma() }
    }
}

impl UncertaintyConfig {
    fn validate(&self) -> Result<()> {
        if self.disturbances == 0 {
            return Err(Error::Config("need at least one disturbance draw".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        Ok(())
    }
}
