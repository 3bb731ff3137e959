//! Arabic-aware normalization, Buckwalter transliteration, character n-grams
//! and hashed sparse featurization.

mod buckwalter;
mod featurize;
mod ngrams;
mod normalize;

pub use buckwalter::buckwalter;
pub use featurize::{
    featurize, fnv1a64, hashed_counts, FeaturizerConfig, SparseVector, Weighting, DEFAULT_DIM,
};
pub use ngrams::char_ngrams;
pub use normalize::normalize;
