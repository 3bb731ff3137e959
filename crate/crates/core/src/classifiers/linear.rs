//! L2-regularized hinge-loss linear classifier trained by dual coordinate
//! descent.
//!
//! The bias is carried as an extra constant feature of value 1, so the
//! minimized objective is `½(‖w‖² + b²) + C Σ max(0, 1 − yᵢ(w·xᵢ + b))`.
//! Each coordinate step solves its one-dimensional dual subproblem exactly,
//! visiting examples in a freshly shuffled order every epoch.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_set, ClassifierModel, Prediction, SvmConfig, TrainingMetadata};
use crate::corpus::{Label, LabeledExample};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::textpipe::{featurize, FeaturizerConfig, SparseVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMarginModel<T> {
    pub featurizer: FeaturizerConfig,
    /// Dense weights, one per hash bucket.
    pub weights: Vec<T>,
    pub bias: T,
    pub metadata: TrainingMetadata,
}

impl<T: Scalar> LinearMarginModel<T> {
    pub fn margin(&self, x: &SparseVector<T>) -> T {
        x.dot_dense(&self.weights) + self.bias
    }

    pub fn predict(&self, text: &str) -> Prediction<T> {
        let x: SparseVector<T> = featurize(text, &self.featurizer);
        if x.is_empty() {
            return Prediction {
                label: Label::Not,
                score: T::zero(),
            };
        }
        let score = self.margin(&x);
        let label = if score > T::zero() { Label::Off } else { Label::Not };
        Prediction { label, score }
    }
}

fn sign<T: Scalar>(label: Label) -> T {
    if label.is_off() {
        T::one()
    } else {
        -T::one()
    }
}

/// `½(‖w‖² + b²) + C Σ max(0, 1 − y(w·x + b))` over featurized examples.
pub fn primal_objective<T: Scalar>(
    weights: &[T],
    bias: T,
    data: &[(SparseVector<T>, Label)],
    c: T,
) -> T {
    let reg = weights.iter().map(|&w| w * w).sum::<T>() + bias * bias;
    let loss: T = data
        .iter()
        .map(|(x, y)| {
            let m = sign::<T>(*y) * (x.dot_dense(weights) + bias);
            (T::one() - m).max(T::zero())
        })
        .sum();
    reg / T::of(2.0) + c * loss
}

pub fn train_linear_margin<T: Scalar>(
    examples: &[LabeledExample],
    config: &SvmConfig,
) -> Result<ClassifierModel<T>> {
    config.validate()?;
    let (_, n_off) = check_training_set(examples)?;

    let data: Vec<(SparseVector<T>, Label)> = examples
        .iter()
        .map(|e| (featurize(&e.text, &config.featurizer), e.label))
        .collect();
    let c = T::of(config.c);
    let mut weights = vec![T::zero(); config.featurizer.dim];
    let mut bias = T::zero();
    let mut alpha = vec![T::zero(); data.len()];
    // diagonal of the dual Hessian, +1 for the bias feature
    let q_diag: Vec<T> = data.iter().map(|(x, _)| x.norm_sq() + T::one()).collect();

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::with_capacity(config.epochs);
    // dual steps do not decrease the primal monotonically; keep the best iterate
    let mut best: Option<(T, Vec<T>, T)> = None;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, label) = &data[i];
            let y = sign::<T>(*label);
            let grad = y * (x.dot_dense(&weights) + bias) - T::one();
            let old = alpha[i];
            let new = (old - grad / q_diag[i]).max(T::zero()).min(c);
            let delta = (new - old) * y;
            if delta != T::zero() {
                alpha[i] = new;
                for &(j, v) in x.entries() {
                    weights[j as usize] += delta * v;
                }
                bias += delta;
            }
        }
        let objective = primal_objective(&weights, bias, &data, c);
        match &mut best {
            Some((b_obj, b_w, b_b)) if objective < *b_obj => {
                *b_obj = objective;
                b_w.copy_from_slice(&weights);
                *b_b = bias;
            }
            Some(_) => {}
            None => best = Some((objective, weights.clone(), bias)),
        }
        trace.push(best.as_ref().expect("set above").0.as_f64());
    }
    let (_, weights, bias) = best.expect("epochs >= 1");

    Ok(ClassifierModel::LinearMargin(LinearMarginModel {
        featurizer: config.featurizer,
        weights,
        bias,
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
