//! Embedding-bag classifier: the averaged embedding of a text's hashed
//! n-grams feeds a two-class linear softmax layer, trained by SGD on
//! cross-entropy with a linearly decaying learning rate.
//!
//! The embedding table conceptually has one row per hash bucket. Rows are
//! initialized from a counter-based generator keyed by `(seed, bucket)`, so
//! only rows touched during training need to be stored; any other row is
//! regenerated on demand and is identical to its initial value.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_training_set, ClassifierModel, EmbedBagConfig, Prediction, TrainingMetadata};
use crate::corpus::{Label, LabeledExample};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::textpipe::{featurize, FeaturizerConfig, SparseVector};

const NOT: usize = 0;
const OFF: usize = 1;

fn class_index(label: Label) -> usize {
    if label.is_off() {
        OFF
    } else {
        NOT
    }
}

/// Parameters of an embedding-bag model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedBagParams<T> {
    pub dim: usize,
    pub embed_dim: usize,
    pub init_seed: u64,
    /// Buckets with an explicitly stored row, ascending.
    pub rows: Vec<u32>,
    /// `rows.len() × embed_dim`, row-major.
    pub table: Vec<T>,
    /// `2 × embed_dim`; row 0 scores NOT, row 1 scores OFF.
    pub output: Vec<T>,
    pub bias: [T; 2],
}

/// Gradient of the summed loss. Only rows with non-zero contribution appear.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedBagGradient<T> {
    pub rows: BTreeMap<u32, Vec<T>>,
    pub output: Vec<T>,
    pub bias: [T; 2],
}

impl<T: Scalar> EmbedBagParams<T> {
    /// Fresh parameters: embeddings uniform in ±1/sqrt(embed_dim), output layer zero.
    pub fn init(dim: usize, embed_dim: usize, init_seed: u64) -> Self {
        Self {
            dim,
            embed_dim,
            init_seed,
            rows: Vec::new(),
            table: Vec::new(),
            output: vec![T::zero(); 2 * embed_dim],
            bias: [T::zero(); 2],
        }
    }

    pub fn initial_row(&self, bucket: u32) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.init_seed);
        rng.set_stream(u64::from(bucket));
        let bound = 1.0 / (self.embed_dim as f64).sqrt();
        (0..self.embed_dim)
            .map(|_| T::of(rng.gen_range(-bound..bound)))
            .collect()
    }

    fn slot(&self, bucket: u32) -> Option<usize> {
        self.rows.binary_search(&bucket).ok()
    }

    pub fn row(&self, bucket: u32) -> Cow<'_, [T]> {
        match self.slot(bucket) {
            Some(s) => Cow::Borrowed(&self.table[s * self.embed_dim..(s + 1) * self.embed_dim]),
            None => Cow::Owned(self.initial_row(bucket)),
        }
    }

    /// Stores every listed bucket explicitly (at its current value).
    pub fn materialize(&mut self, buckets: impl IntoIterator<Item = u32>) {
        let mut wanted: Vec<u32> = buckets
            .into_iter()
            .filter(|&b| self.slot(b).is_none())
            .collect();
        if wanted.is_empty() {
            return;
        }
        wanted.sort_unstable();
        wanted.dedup();
        let mut merged: Vec<u32> = self.rows.iter().copied().chain(wanted).collect();
        merged.sort_unstable();
        let mut table = Vec::with_capacity(merged.len() * self.embed_dim);
        for &b in &merged {
            table.extend_from_slice(&self.row(b));
        }
        self.rows = merged;
        self.table = table;
    }

    pub fn row_mut(&mut self, bucket: u32) -> &mut [T] {
        self.materialize([bucket]);
        let s = self.slot(bucket).expect("materialized");
        &mut self.table[s * self.embed_dim..(s + 1) * self.embed_dim]
    }

    /// Weighted mean of the rows selected by `x`.
    pub fn hidden(&self, x: &SparseVector<T>) -> Vec<T> {
        let mut h = vec![T::zero(); self.embed_dim];
        let total: T = x.entries().iter().map(|&(_, w)| w).sum();
        if total == T::zero() {
            return h;
        }
        for &(b, w) in x.entries() {
            let row = self.row(b);
            let scale = w / total;
            for (hk, &rk) in h.iter_mut().zip(row.iter()) {
                *hk += scale * rk;
            }
        }
        h
    }

    /// Class probabilities `[P(NOT), P(OFF)]`.
    pub fn probabilities(&self, hidden: &[T]) -> [T; 2] {
        let logit = |c: usize| {
            let w = &self.output[c * self.embed_dim..(c + 1) * self.embed_dim];
            w.iter().zip(hidden).map(|(&a, &b)| a * b).sum::<T>() + self.bias[c]
        };
        let (z0, z1) = (logit(NOT), logit(OFF));
        let m = z0.max(z1);
        let (e0, e1) = ((z0 - m).exp(), (z1 - m).exp());
        let s = e0 + e1;
        [e0 / s, e1 / s]
    }

    /// Summed cross-entropy over `data`.
    pub fn loss(&self, data: &[(SparseVector<T>, Label)]) -> T {
        data.iter()
            .map(|(x, y)| -self.probabilities(&self.hidden(x))[class_index(*y)].ln())
            .sum()
    }

    /// Analytic gradient of [`loss`](Self::loss).
    pub fn gradient(&self, data: &[(SparseVector<T>, Label)]) -> EmbedBagGradient<T> {
        let ed = self.embed_dim;
        let mut g = EmbedBagGradient {
            rows: BTreeMap::new(),
            output: vec![T::zero(); 2 * ed],
            bias: [T::zero(); 2],
        };
        for (x, y) in data {
            let h = self.hidden(x);
            let p = self.probabilities(&h);
            let mut dz = p;
            dz[class_index(*y)] -= T::one();
            let mut dh = vec![T::zero(); ed];
            for c in 0..2 {
                g.bias[c] += dz[c];
                for k in 0..ed {
                    g.output[c * ed + k] += dz[c] * h[k];
                    dh[k] += dz[c] * self.output[c * ed + k];
                }
            }
            let total: T = x.entries().iter().map(|&(_, w)| w).sum();
            if total == T::zero() {
                continue;
            }
            for &(b, w) in x.entries() {
                let row = g.rows.entry(b).or_insert_with(|| vec![T::zero(); ed]);
                for k in 0..ed {
                    row[k] += w / total * dh[k];
                }
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedBagModel<T> {
    pub featurizer: FeaturizerConfig,
    pub params: EmbedBagParams<T>,
    pub metadata: TrainingMetadata,
}

impl<T: Scalar> EmbedBagModel<T> {
    pub fn predict(&self, text: &str) -> Prediction<T> {
        let x: SparseVector<T> = featurize(text, &self.featurizer);
        let half = T::of(0.5);
        if x.is_empty() {
            return Prediction {
                label: Label::Not,
                score: half,
            };
        }
        let p_off = self.params.probabilities(&self.params.hidden(&x))[OFF];
        let label = if p_off > half { Label::Off } else { Label::Not };
        Prediction {
            label,
            score: p_off,
        }
    }
}

/// Example with its rows resolved to table slots; weights pre-divided by their sum.
struct Bag<T> {
    slots: Vec<(usize, T)>,
    class: usize,
}

pub fn train_embed_bag<T: Scalar>(
    examples: &[LabeledExample],
    config: &EmbedBagConfig,
) -> Result<ClassifierModel<T>> {
    config.validate()?;
    let (_, n_off) = check_training_set(examples)?;

    let features: Vec<SparseVector<T>> = examples
        .iter()
        .map(|e| featurize(&e.text, &config.featurizer))
        .collect();
    let mut params = EmbedBagParams::<T>::init(config.featurizer.dim, config.embed_dim, config.seed);
    params.materialize(features.iter().flat_map(|x| x.entries().iter().map(|&(b, _)| b)));

    let bags: Vec<Bag<T>> = features
        .iter()
        .zip(examples)
        .map(|(x, e)| {
            let total: T = x.entries().iter().map(|&(_, w)| w).sum();
            Bag {
                slots: x
                    .entries()
                    .iter()
                    .map(|&(b, w)| (params.slot(b).expect("materialized"), w / total))
                    .collect(),
                class: class_index(e.label),
            }
        })
        .collect();

    let ed = config.embed_dim;
    let total_steps = (config.epochs * bags.len()) as f64;
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..bags.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::with_capacity(config.epochs);
    let mut h = vec![T::zero(); ed];
    let mut dh = vec![T::zero(); ed];
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = T::zero();
        for &i in &order {
            let bag = &bags[i];
            if bag.slots.is_empty() {
                step += 1;
                continue;
            }
            let lr = T::of(config.learning_rate * (1.0 - step as f64 / total_steps));
            step += 1;

            h.iter_mut().for_each(|v| *v = T::zero());
            for &(s, w) in &bag.slots {
                for (hk, &rk) in h.iter_mut().zip(&params.table[s * ed..(s + 1) * ed]) {
                    *hk += w * rk;
                }
            }
            let p = params.probabilities(&h);
            epoch_loss += -p[bag.class].ln();
            let mut dz = p;
            dz[bag.class] -= T::one();

            dh.iter_mut().for_each(|v| *v = T::zero());
            for c in 0..2 {
                for k in 0..ed {
                    dh[k] += dz[c] * params.output[c * ed + k];
                }
            }
            for c in 0..2 {
                params.bias[c] -= lr * dz[c];
                for k in 0..ed {
                    params.output[c * ed + k] -= lr * dz[c] * h[k];
                }
            }
            for &(s, w) in &bag.slots {
                for (rk, &g) in params.table[s * ed..(s + 1) * ed].iter_mut().zip(&dh) {
                    *rk -= lr * w * g;
                }
            }
        }
        trace.push(epoch_loss.as_f64() / bags.len() as f64);
    }

    Ok(ClassifierModel::EmbedBag(EmbedBagModel {
        featurizer: config.featurizer,
        params,
        metadata: TrainingMetadata {
            objective: *trace.last().expect("epochs >= 1"),
            objective_trace: trace,
            seed: config.seed,
            epochs: config.epochs,
            n_examples: examples.len(),
            n_off,
        },
    }))
}
