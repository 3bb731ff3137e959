use serde::{Deserialize, Serialize};

use super::{char_ngrams, normalize};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default hash space: 2^20 buckets.
pub const DEFAULT_DIM: usize = 1 << 20;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
///
/// This is the feature hash; an n-gram lands in bucket `fnv1a64(g) % dim`.
pub fn fnv1a64(s: &str) -> u64 {
    s.bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Weighting {
    /// Raw n-gram counts scaled to unit Euclidean norm.
    #[default]
    CountL2,
    /// 1.0 for every bucket hit at least once.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturizerConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub dim: usize,
    pub weighting: Weighting,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            n_min: 3,
            n_max: 5,
            dim: DEFAULT_DIM,
            weighting: Weighting::CountL2,
        }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(Error::InvalidConfig(format!(
                "n-gram range {}..={} must satisfy 1 <= n_min <= n_max",
                self.n_min, self.n_max
            )));
        }
        if self.dim < 2 || self.dim > u32::MAX as usize + 1 {
            return Err(Error::InvalidConfig(format!(
                "feature dim {} out of range [2, 2^32]",
                self.dim
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn bucket(&self, ngram: &str) -> u32 {
        (fnv1a64(ngram) % self.dim as u64) as u32
    }
}

/// Sparse feature vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector<T> {
    entries: Vec<(u32, T)>,
}

impl<T: Scalar> SparseVector<T> {
    /// Builds a vector from unsorted `(index, value)` pairs, summing duplicates
    /// and dropping zeros.
    pub fn from_pairs(mut pairs: Vec<(u32, T)>) -> Self {
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, T)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != T::zero());
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, T)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn norm_sq(&self) -> T {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// Dot product against a dense weight vector.
    pub fn dot_dense(&self, dense: &[T]) -> T {
        self.entries
            .iter()
            .map(|&(i, v)| dense[i as usize] * v)
            .sum()
    }
}

/// Hashed n-gram counts of the normalized text, sorted by bucket.
pub fn hashed_counts(text: &str, config: &FeaturizerConfig) -> Vec<(u32, u32)> {
    let normalized = normalize(text);
    let mut buckets: Vec<u32> = char_ngrams(&normalized, config.n_min, config.n_max)
        .into_iter()
        .map(|g| config.bucket(g))
        .collect();
    buckets.sort_unstable();
    let mut out: Vec<(u32, u32)> = Vec::new();
    for b in buckets {
        match out.last_mut() {
            Some((i, c)) if *i == b => *c += 1,
            _ => out.push((b, 1)),
        }
    }
    out
}

/// Normalizes `text`, extracts character n-grams and hashes them into a
/// sparse vector weighted per `config.weighting`.
pub fn featurize<T: Scalar>(text: &str, config: &FeaturizerConfig) -> SparseVector<T> {
    let counts = hashed_counts(text, config);
    let mut entries: Vec<(u32, T)> = match config.weighting {
        Weighting::Binary => counts.iter().map(|&(i, _)| (i, T::one())).collect(),
        Weighting::CountL2 => counts
            .iter()
            .map(|&(i, c)| (i, T::of(f64::from(c))))
            .collect(),
    };
    if config.weighting == Weighting::CountL2 {
        let norm = entries.iter().map(|&(_, v)| v * v).sum::<T>().sqrt();
        if norm > T::zero() {
            for (_, v) in entries.iter_mut() {
                *v /= norm;
            }
        }
    }
    SparseVector { entries }
}
