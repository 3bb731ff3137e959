use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, LabeledExample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    /// Fold id per example index.
    pub assignment: Vec<usize>,
}

impl FoldAssignment {
    /// Example indices held out in `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f == fold)
    }

    /// Example indices used for training when `fold` is held out, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.indices_where(|f| f != fold)
    }

    fn indices_where(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &f)| pred(f))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Seeded stratified k-fold assignment.
///
/// Each class is shuffled independently and dealt round-robin; the OFF deal
/// resumes at the fold where the NOT deal stopped, so both per-class counts
/// and fold sizes differ by at most one across folds.
pub fn stratified_folds(examples: &[LabeledExample], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be >= 2, got {k}")));
    }
    if examples.len() < k {
        return Err(Error::TooFewExamples {
            label: "any",
            k,
            needed: k,
            found: examples.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; examples.len()];
    let mut next = 0usize;
    for label in [Label::Not, Label::Off] {
        let mut idx: Vec<usize> = examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == label)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Err(Error::TooFewExamples {
                label: label.as_str(),
                k,
                needed: 1,
                found: 0,
            });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { k, assignment })
}
