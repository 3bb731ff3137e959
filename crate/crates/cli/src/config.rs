//! Config-file schemas, flag overrides and the run records embedded in outputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use offexpand::classifiers::{ClassifierConfig, EmbedBagConfig, SvmConfig};
use offexpand::eval::Protocol;
use offexpand::{ExpansionConfig, ExpansionStrategy, FeaturizerConfig, Weighting};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// Bad invocation or configuration; maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Svm,
    Embedbag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarArg {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    CountL2,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    CvBaseline,
    PerTarget,
    GlobalCv,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::CvBaseline => Protocol::CvBaseline,
            ProtocolArg::PerTarget => Protocol::PerTarget,
            ProtocolArg::GlobalCv => Protocol::GlobalCv,
        }
    }
}

pub fn parse_strategy(s: &str) -> Result<ExpansionStrategy, String> {
    s.parse().map_err(|e: offexpand::Error| e.to_string())
}

/// Hyperparameter flags shared by `train` and `eval`; each overrides the
/// config file when given.
#[derive(Debug, Clone, Default, Args)]
pub struct HyperArgs {
    /// Linear-margin hinge weight C
    #[arg(long)]
    pub c: Option<f64>,
    /// Linear-margin training epochs
    #[arg(long)]
    pub svm_epochs: Option<usize>,
    /// Embedding-bag learning rate
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Embedding-bag training epochs
    #[arg(long)]
    pub embedbag_epochs: Option<usize>,
    /// Embedding-bag embedding width
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Hashed feature space size
    #[arg(long)]
    pub dim: Option<usize>,
    /// Shortest character n-gram
    #[arg(long)]
    pub n_min: Option<usize>,
    /// Longest character n-gram
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Feature weighting
    #[arg(long, value_enum)]
    pub weighting: Option<WeightingArg>,
}

impl HyperArgs {
    fn featurizer(&self, f: &mut FeaturizerConfig) {
        if let Some(d) = self.dim {
            f.dim = d;
        }
        if let Some(n) = self.n_min {
            f.n_min = n;
        }
        if let Some(n) = self.n_max {
            f.n_max = n;
        }
        if let Some(w) = self.weighting {
            f.weighting = match w {
                WeightingArg::CountL2 => Weighting::CountL2,
                WeightingArg::Binary => Weighting::Binary,
            };
        }
    }

    pub fn apply(&self, svm: &mut SvmConfig, eb: &mut EmbedBagConfig, seed: Option<u64>) {
        if let Some(c) = self.c {
            svm.c = c;
        }
        if let Some(e) = self.svm_epochs {
            svm.epochs = e;
        }
        if let Some(lr) = self.learning_rate {
            eb.learning_rate = lr;
        }
        if let Some(e) = self.embedbag_epochs {
            eb.epochs = e;
        }
        if let Some(d) = self.embed_dim {
            eb.embed_dim = d;
        }
        self.featurizer(&mut svm.featurizer);
        self.featurizer(&mut eb.featurizer);
        if let Some(s) = seed {
            svm.seed = s;
            eb.seed = s;
        }
    }
}

pub fn classifier(variant: VariantArg, svm: &SvmConfig, eb: &EmbedBagConfig) -> Result<ClassifierConfig> {
    let cfg = match variant {
        VariantArg::Svm => ClassifierConfig::LinearMargin(*svm),
        VariantArg::Embedbag => ClassifierConfig::EmbedBag(*eb),
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

/// Reads a JSON config file. Relative paths inside it are later resolved
/// against the file's directory.
pub fn read_config<C: DeserializeOwned>(path: &Path) -> Result<C> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

pub fn resolve(base: Option<&Path>, p: PathBuf) -> PathBuf {
    match base.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainFile {
    pub variant: Option<VariantArg>,
    pub seed: Option<u64>,
    pub scalar: Option<ScalarArg>,
    pub svm: SvmConfig,
    pub embedbag: EmbedBagConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainRunConfig {
    pub train: PathBuf,
    pub model_out: PathBuf,
    pub scalar: ScalarArg,
    pub classifier: ClassifierConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpandRunConfig {
    pub model: PathBuf,
    pub replies: PathBuf,
    pub targets: Vec<String>,
    pub expansion: ExpansionConfig,
    pub out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalFile {
    pub seed_train: Option<PathBuf>,
    pub replies: Option<PathBuf>,
    pub gold_tests: Option<PathBuf>,
    pub targets: Option<Vec<String>>,
    pub variants: Option<Vec<VariantArg>>,
    pub strategies: Option<Vec<String>>,
    pub min_replies: Option<usize>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub scalar: Option<ScalarArg>,
    pub svm: SvmConfig,
    pub embedbag: EmbedBagConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRunConfig {
    pub protocol: Protocol,
    pub seed_train: PathBuf,
    pub replies: Option<PathBuf>,
    pub gold_tests: Option<PathBuf>,
    pub targets: Vec<String>,
    pub classifiers: Vec<ClassifierConfig>,
    pub expansions: Vec<ExpansionConfig>,
    pub k: usize,
    pub seed: u64,
    pub scalar: ScalarArg,
}

/// The strategy grid used when none is configured.
pub const DEFAULT_STRATEGIES: [&str; 4] = ["top:10", "top:20", "top:50", "frac:0.5"];
