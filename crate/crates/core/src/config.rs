//! Experiment configuration: a TOML file that fully determines a run, plus
//! validation and a canonical fingerprint used for report identity and
//! snapshot invalidation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::predictors::{PredictOpts, PredictorKind};
use crate::textnorm::{self, NormConfig, StepFlags};
use crate::vectorspace::Weighting;

/// Hex SHA-256 of a value's canonical JSON form. Structs serialize in field
/// order and the config types use ordered maps, so equal values always hash
/// equal.
pub fn fingerprint<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("value serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// How the dataset file is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    /// Decide by extension: `.jsonl` is JSONL, anything else the
    /// `key: value` review format.
    #[default]
    Auto,
    Snap,
    Jsonl,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_lowercase().as_str() {
            "auto" => Ok(DataFormat::Auto),
            "snap" => Ok(DataFormat::Snap),
            "jsonl" => Ok(DataFormat::Jsonl),
            other => Err(Error::Config(format!(
                "unknown data format {other:?} (expected auto, snap or jsonl)"
            ))),
        }
    }
}

/// Stratified sampling parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub n: usize,
    /// Target proportions for stars 1-5.
    pub distribution: [f64; 5],
    pub seed: u64,
    pub stage: SampleStage,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            n: 0,
            distribution: [0.2; 5],
            seed: 42,
            stage: SampleStage::default(),
        }
    }
}

/// Whether sampling happens before or after pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStage {
    PrePrune,
    /// Default: prune first so the sample keeps its exact size.
    #[default]
    PostPrune,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 42,
        }
    }
}

/// Normalization settings as configured (word lists by path, not content).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    /// `false` turns the whole pipeline off (tokens pass through verbatim).
    pub enabled: bool,
    pub steps: StepFlags,
    /// Stopword list path; the built-in list when absent.
    pub stopwords: Option<PathBuf>,
    /// Slang list path; the built-in list when absent.
    pub slang: Option<PathBuf>,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            enabled: true,
            steps: StepFlags::default(),
            stopwords: None,
            slang: None,
        }
    }
}

impl NormalizationConfig {
    /// Materialize the word lists. Unreadable list files are configuration
    /// errors: the config pointed somewhere unusable.
    pub fn resolve(&self) -> Result<NormConfig> {
        if !self.enabled {
            return Ok(NormConfig::disabled());
        }
        let stopwords = match &self.stopwords {
            Some(p) => textnorm::load_stopwords(p).map_err(io_to_config)?,
            None => textnorm::builtin_stopwords().clone(),
        };
        let slang = match &self.slang {
            Some(p) => textnorm::load_slang(p).map_err(io_to_config)?,
            None => textnorm::builtin_slang().clone(),
        };
        Ok(NormConfig {
            steps: self.steps,
            stopwords,
            slang,
        })
    }
}

fn io_to_config(e: Error) -> Error {
    match e {
        Error::Io { path, source } => Error::Config(format!(
            "cannot read wordlist {}: {source}",
            path.display()
        )),
        other => other,
    }
}

/// A full experiment: dataset, preparation pipeline, predictors, knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub format: DataFormat,
    /// Keep only users and items with at least this many reviews (k-core);
    /// 0 or 1 disables pruning.
    pub prune_min_ratings: usize,
    pub weighting: Weighting,
    pub predictors: Vec<PredictorKind>,
    pub sample: Option<SampleConfig>,
    pub split: SplitConfig,
    pub normalization: NormalizationConfig,
    pub options: PredictOpts,
    /// Profile cache location; reused when the configuration still matches.
    pub snapshot: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::new(),
            format: DataFormat::Auto,
            prune_min_ratings: 5,
            weighting: Weighting::TfIdf,
            predictors: vec![
                PredictorKind::Cm,
                PredictorKind::Mcm,
                PredictorKind::Acm,
                PredictorKind::CfMcm,
                PredictorKind::CfAcm,
            ],
            sample: None,
            split: SplitConfig::default(),
            normalization: NormalizationConfig::default(),
            options: PredictOpts::default(),
            snapshot: None,
        }
    }
}

impl ExperimentConfig {
    /// Read and validate a TOML config file.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.as_os_str().is_empty() {
            return Err(Error::Config("no dataset given".into()));
        }
        let f = self.split.train_fraction;
        if !(f.is_finite() && 0.0 < f && f < 1.0) {
            return Err(Error::Config(format!(
                "split.train_fraction must be strictly between 0 and 1, got {f}"
            )));
        }
        if let Some(sample) = &self.sample {
            if sample.n == 0 {
                return Err(Error::Config("sample.n must be at least 1".into()));
            }
            let sum: f64 = sample.distribution.iter().sum();
            if sample.distribution.iter().any(|p| *p < 0.0 || !p.is_finite())
                || (sum - 1.0).abs() > 1e-9
            {
                return Err(Error::Config(format!(
                    "sample.distribution must be non-negative and sum to 1, got {:?}",
                    sample.distribution
                )));
            }
        }
        if self.predictors.is_empty() {
            return Err(Error::Config("predictors list is empty".into()));
        }
        Ok(())
    }

    /// Fingerprint covering the config and the resolved normalization
    /// (so editing a word list file also changes the hash).
    pub fn run_fingerprint(&self, norm: &NormConfig) -> String {
        fingerprint(&(self, norm))
    }
}
