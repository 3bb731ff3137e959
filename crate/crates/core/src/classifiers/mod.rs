//! Linear max-margin and embedding-bag binary classifiers over hashed
//! character n-grams.

mod embedbag;
mod linear;
mod persist;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledExample};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textpipe::FeaturizerConfig;

pub use embedbag::{train_embed_bag, EmbedBagGradient, EmbedBagModel, EmbedBagParams};
pub use linear::{primal_objective, train_linear_margin, LinearMarginModel};
pub use persist::{load_model, load_model_expecting, save_model, FORMAT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    LinearMargin,
    EmbedBag,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::LinearMargin => "LINEAR_MARGIN",
            Variant::EmbedBag => "EMBED_BAG",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Hinge-loss weight against the regularizer.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    pub featurizer: FeaturizerConfig,
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        self.featurizer.validate()?;
        if !(self.c > 0.0) {
            return Err(Error::InvalidConfig(format!("C must be > 0, got {}", self.c)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 20,
            seed: 0,
            featurizer: FeaturizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedBagConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub embed_dim: usize,
    pub seed: u64,
    pub featurizer: FeaturizerConfig,
}

impl EmbedBagConfig {
    pub fn validate(&self) -> Result<()> {
        self.featurizer.validate()?;
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.embed_dim == 0 {
            return Err(Error::InvalidConfig("embed_dim must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for EmbedBagConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 50,
            embed_dim: 100,
            seed: 0,
            featurizer: FeaturizerConfig::default(),
        }
    }
}

/// Either classifier's training configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClassifierConfig {
    LinearMargin(SvmConfig),
    EmbedBag(EmbedBagConfig),
}

impl ClassifierConfig {
    pub fn variant(&self) -> Variant {
        match self {
            ClassifierConfig::LinearMargin(_) => Variant::LinearMargin,
            ClassifierConfig::EmbedBag(_) => Variant::EmbedBag,
        }
    }

    pub fn featurizer(&self) -> &FeaturizerConfig {
        match self {
            ClassifierConfig::LinearMargin(c) => &c.featurizer,
            ClassifierConfig::EmbedBag(c) => &c.featurizer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierConfig::LinearMargin(c) => c.validate(),
            ClassifierConfig::EmbedBag(c) => c.validate(),
        }
    }

    pub fn train<T: Scalar>(&self, examples: &[LabeledExample]) -> Result<ClassifierModel<T>> {
        match self {
            ClassifierConfig::LinearMargin(c) => train_linear_margin(examples, c),
            ClassifierConfig::EmbedBag(c) => train_embed_bag(examples, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    /// Final training objective (regularized hinge for the margin model,
    /// mean cross-entropy for the embedding bag).
    pub objective: f64,
    /// Objective after each epoch.
    pub objective_trace: Vec<f64>,
    pub seed: u64,
    pub epochs: usize,
    pub n_examples: usize,
    pub n_off: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T> {
    pub label: Label,
    /// Signed margin for the margin model, P(OFF) for the embedding bag.
    pub score: T,
}

/// A trained classifier. Immutable; `predict` is a pure function of
/// `(model, text)`, so a model can be shared across threads freely.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel<T> {
    LinearMargin(LinearMarginModel<T>),
    EmbedBag(EmbedBagModel<T>),
}

impl<T: Scalar> ClassifierModel<T> {
    pub fn variant(&self) -> Variant {
        match self {
            ClassifierModel::LinearMargin(_) => Variant::LinearMargin,
            ClassifierModel::EmbedBag(_) => Variant::EmbedBag,
        }
    }

    pub fn predict(&self, text: &str) -> Prediction<T> {
        match self {
            ClassifierModel::LinearMargin(m) => m.predict(text),
            ClassifierModel::EmbedBag(m) => m.predict(text),
        }
    }

    pub fn featurizer(&self) -> &FeaturizerConfig {
        match self {
            ClassifierModel::LinearMargin(m) => &m.featurizer,
            ClassifierModel::EmbedBag(m) => &m.featurizer,
        }
    }

    pub fn metadata(&self) -> &TrainingMetadata {
        match self {
            ClassifierModel::LinearMargin(m) => &m.metadata,
            ClassifierModel::EmbedBag(m) => &m.metadata,
        }
    }
}

/// Checks the shared preconditions and returns (NOT, OFF) counts.
pub(crate) fn check_training_set(examples: &[LabeledExample]) -> Result<(usize, usize)> {
    if examples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let (n_not, n_off) = crate::corpus::class_counts(examples);
    if n_off == 0 {
        return Err(Error::SingleClass("NOT"));
    }
    if n_not == 0 {
        return Err(Error::SingleClass("OFF"));
    }
    Ok((n_not, n_off))
}
