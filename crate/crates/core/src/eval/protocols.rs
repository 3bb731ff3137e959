use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{
    confusion, expansion_volume_stats, macro_average, metrics, relative_improvement,
    ConfusionCounts, Metrics,
};
use crate::classifiers::{ClassifierConfig, ClassifierModel, Prediction};
use crate::corpus::{self, class_counts, dedupe, stratified_folds, Label, LabeledExample, Tweet};
use crate::error::{Error, Result};
use crate::expansion::{
    expand_from_tagged, expand_training_set, imbalance_ratio, merge_expansions, tag_replies,
    ExpansionConfig,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// k-fold CV on the seed set, no expansion.
    CvBaseline,
    /// Per target: expand with that target's selected users, test on its gold set.
    PerTarget,
    /// k-fold CV on the seed set with all targets' expansions added to the
    /// training folds; users are selected with a model trained on those folds.
    GlobalCv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetResult<T> {
    pub target: String,
    pub metrics: Metrics<T>,
    pub counts: ConfusionCounts,
    pub n_test: usize,
    pub n_replies: usize,
    pub n_selected_users: usize,
    pub n_expansion_tweets: usize,
    /// NOT:OFF ratio of the training set used for this target.
    pub imbalance: Option<f64>,
    /// Gold test texts that also occur among the target's replies.
    pub test_reply_overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test: usize,
    pub train_not: usize,
    pub train_off: usize,
    pub imbalance: Option<f64>,
    pub n_expansion_tweets: usize,
    /// Expansion texts dropped because they coincide with a test-fold text.
    pub n_leaked_dropped: usize,
    pub hygiene_ok: bool,
}

/// One row of a report: the baseline or one expansion configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct ConfigurationResult<T> {
    pub name: String,
    pub expansion: Option<ExpansionConfig>,
    /// Macro average over targets (per-target) or pooled over folds (CV).
    pub metrics: Metrics<T>,
    /// Pooled confusion counts (CV protocols only).
    pub counts: Option<ConfusionCounts>,
    pub relative_f1_improvement: Option<T>,
    /// Mean expansion tweets per target.
    pub expansion_volume: Option<f64>,
    pub imbalance_before: Option<f64>,
    pub imbalance_after: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_target: Vec<TargetResult<T>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Deserialize<'de>"))]
pub struct ExperimentReport<T> {
    pub protocol: Protocol,
    pub tool_version: String,
    pub classifier: ClassifierConfig,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub n_seed_examples: usize,
    pub n_seed_duplicates_dropped: usize,
    pub baseline: ConfigurationResult<T>,
    pub expanded: Vec<ConfigurationResult<T>>,
    pub skipped_targets: Vec<String>,
    pub warnings: Vec<String>,
}

/// Training set actually used for one (fold, configuration) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldTrace {
    pub fold: usize,
    pub configuration: String,
    pub training_set: Vec<LabeledExample>,
}

fn evaluate<T: Scalar>(model: &ClassifierModel<T>, tests: &[LabeledExample]) -> ConfusionCounts {
    let gold: Vec<Label> = tests.iter().map(|e| e.label).collect();
    let predicted: Vec<Label> = tests.iter().map(|e| model.predict(&e.text).label).collect();
    confusion(&gold, &predicted).expect("equal lengths")
}

fn pooled_ratio(pairs: impl Iterator<Item = (usize, usize)>) -> Option<f64> {
    let (n_not, n_off) = pairs.fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
    (n_off > 0).then(|| n_not as f64 / n_off as f64)
}

fn relative<T: Scalar>(baseline: &Metrics<T>, new: &Metrics<T>) -> Option<T> {
    relative_improvement(baseline.f1, new.f1).ok()
}

fn row<T: Scalar>(name: String, expansion: Option<ExpansionConfig>, metrics: Metrics<T>) -> ConfigurationResult<T> {
    ConfigurationResult {
        name,
        expansion,
        metrics,
        counts: None,
        relative_f1_improvement: None,
        expansion_volume: None,
        imbalance_before: None,
        imbalance_after: None,
        per_target: Vec::new(),
        folds: Vec::new(),
    }
}

/// k-fold cross-validation of the classifier on the (deduplicated) seed set,
/// with held-out predictions pooled across folds.
pub fn run_cv_baseline<T: Scalar>(
    seed_set: &[LabeledExample],
    classifier: &ClassifierConfig,
    k: usize,
    seed: u64,
) -> Result<ExperimentReport<T>> {
    let (examples, dropped) = dedupe(seed_set.to_vec());
    let folds = stratified_folds(&examples, k, seed)?;
    let per_fold: Vec<(ConfusionCounts, FoldResult)> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<LabeledExample> = folds.train_indices(f).into_iter().map(|i| examples[i].clone()).collect();
            let test: Vec<LabeledExample> = folds.test_indices(f).into_iter().map(|i| examples[i].clone()).collect();
            let model = classifier.train::<T>(&train)?;
            let (train_not, train_off) = class_counts(&train);
            Ok((
                evaluate(&model, &test),
                FoldResult {
                    fold: f,
                    n_test: test.len(),
                    train_not,
                    train_off,
                    imbalance: imbalance_ratio(&train),
                    n_expansion_tweets: 0,
                    n_leaked_dropped: 0,
                    hygiene_ok: true,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let mut pooled = ConfusionCounts::default();
    per_fold.iter().for_each(|(c, _)| pooled.add(c));
    let mut baseline = row("baseline".into(), None, metrics(&pooled));
    baseline.counts = Some(pooled);
    baseline.imbalance_before = pooled_ratio(per_fold.iter().map(|(_, r)| (r.train_not, r.train_off)));
    baseline.folds = per_fold.into_iter().map(|(_, r)| r).collect();

    Ok(ExperimentReport {
        protocol: Protocol::CvBaseline,
        tool_version: crate::VERSION.to_string(),
        classifier: *classifier,
        k: Some(k),
        seed: Some(seed),
        n_seed_examples: examples.len(),
        n_seed_duplicates_dropped: dropped,
        baseline,
        expanded: Vec::new(),
        skipped_targets: Vec::new(),
        warnings: Vec::new(),
    })
}

struct ActiveTarget<'a, T> {
    target: &'a str,
    tests: &'a [LabeledExample],
    replies: Vec<Tweet>,
    predictions: Vec<Prediction<T>>,
    overlap: usize,
}

/// Per-target expansion experiment.
///
/// A baseline model is trained once on the full seed set. For each target it
/// tags that target's replies, selects users, expands, retrains on
/// seed ∪ expansion and scores both models on the target's gold test set.
/// Rows report macro averages over targets.
pub fn run_per_target_experiment<T: Scalar>(
    seed_set: &[LabeledExample],
    reply_corpus: &[Tweet],
    gold_tests: &BTreeMap<String, Vec<LabeledExample>>,
    classifier: &ClassifierConfig,
    expansions: &[ExpansionConfig],
) -> Result<ExperimentReport<T>> {
    for e in expansions {
        e.validate()?;
    }
    let (seed, dropped) = dedupe(seed_set.to_vec());
    let baseline_model = classifier.train::<T>(&seed)?;
    let seed_ratio = imbalance_ratio(&seed);

    let mut skipped = Vec::new();
    let mut warnings = Vec::new();
    let mut active = Vec::new();
    for (target, tests) in gold_tests {
        let replies = corpus::replies_to(reply_corpus, target);
        if replies.is_empty() {
            warnings.push(format!("target {target} has no replies; skipped"));
            skipped.push(target.clone());
            continue;
        }
        let predictions = tag_replies(&baseline_model, &replies)
            .into_iter()
            .map(|(_, p)| p)
            .collect();
        let reply_texts: HashSet<String> = replies.iter().map(|t| crate::textpipe::normalize(&t.text)).collect();
        let overlap = tests.iter().filter(|e| reply_texts.contains(&e.text)).count();
        active.push(ActiveTarget {
            target,
            tests,
            replies,
            predictions,
            overlap,
        });
    }

    let baseline_targets: Vec<TargetResult<T>> = active
        .iter()
        .map(|a| {
            let counts = evaluate(&baseline_model, a.tests);
            TargetResult {
                target: a.target.to_string(),
                metrics: metrics(&counts),
                counts,
                n_test: a.tests.len(),
                n_replies: a.replies.len(),
                n_selected_users: 0,
                n_expansion_tweets: 0,
                imbalance: seed_ratio,
                test_reply_overlap: a.overlap,
            }
        })
        .collect();
    let mut baseline = row(
        "baseline".into(),
        None,
        macro_average(&baseline_targets.iter().map(|t| t.metrics).collect::<Vec<_>>()),
    );
    baseline.imbalance_before = seed_ratio;
    baseline.per_target = baseline_targets;

    let units: Vec<(usize, usize)> = (0..expansions.len())
        .flat_map(|c| (0..active.len()).map(move |t| (c, t)))
        .collect();
    let results: Vec<TargetResult<T>> = units
        .par_iter()
        .map(|&(c, t)| {
            let a = &active[t];
            let tagged: Vec<(&Tweet, Prediction<T>)> =
                a.replies.iter().zip(a.predictions.iter().copied()).collect();
            let exp = expand_from_tagged(&tagged, a.target, &expansions[c])?;
            let set = expand_training_set(&seed, &exp.examples);
            let retrained;
            let model = if exp.examples.is_empty() {
                &baseline_model
            } else {
                retrained = classifier.train::<T>(&set.examples)?;
                &retrained
            };
            let counts = evaluate(model, a.tests);
            Ok(TargetResult {
                target: a.target.to_string(),
                metrics: metrics(&counts),
                counts,
                n_test: a.tests.len(),
                n_replies: a.replies.len(),
                n_selected_users: exp.selected.len(),
                n_expansion_tweets: exp.examples.len(),
                imbalance: set.imbalance,
                test_reply_overlap: a.overlap,
            })
        })
        .collect::<Result<_>>()?;

    let mut expanded = Vec::with_capacity(expansions.len());
    let mut results = results.into_iter();
    for cfg in expansions {
        let per_target: Vec<TargetResult<T>> = results.by_ref().take(active.len()).collect();
        let m = macro_average(&per_target.iter().map(|t| t.metrics).collect::<Vec<_>>());
        let volumes: BTreeMap<String, usize> = per_target
            .iter()
            .map(|t| (t.target.clone(), t.n_expansion_tweets))
            .collect();
        let after: Vec<f64> = per_target.iter().filter_map(|t| t.imbalance).collect();
        let mut r = row(cfg.strategy.label(), Some(*cfg), m);
        r.relative_f1_improvement = relative(&baseline.metrics, &m);
        r.expansion_volume = Some(expansion_volume_stats(&volumes).mean);
        r.imbalance_before = seed_ratio;
        r.imbalance_after = (!after.is_empty()).then(|| after.iter().sum::<f64>() / after.len() as f64);
        r.per_target = per_target;
        expanded.push(r);
    }

    Ok(ExperimentReport {
        protocol: Protocol::PerTarget,
        tool_version: crate::VERSION.to_string(),
        classifier: *classifier,
        k: None,
        seed: None,
        n_seed_examples: seed.len(),
        n_seed_duplicates_dropped: dropped,
        baseline,
        expanded,
        skipped_targets: skipped,
        warnings,
    })
}

struct FoldOutcome {
    results: Vec<(ConfusionCounts, FoldResult)>,
    traces: Vec<FoldTrace>,
}

fn leaked(set: &[LabeledExample], test_texts: &HashSet<&str>) -> usize {
    set.iter().filter(|e| test_texts.contains(e.text.as_str())).count()
}

#[allow(clippy::too_many_arguments)]
fn run_global_fold<T: Scalar>(
    fold: usize,
    examples: &[LabeledExample],
    folds: &corpus::FoldAssignment,
    reply_corpus: &[Tweet],
    targets: &[String],
    classifier: &ClassifierConfig,
    expansions: &[ExpansionConfig],
    keep_traces: bool,
) -> Result<FoldOutcome> {
    let train: Vec<LabeledExample> = folds.train_indices(fold).into_iter().map(|i| examples[i].clone()).collect();
    let test: Vec<LabeledExample> = folds.test_indices(fold).into_iter().map(|i| examples[i].clone()).collect();
    let test_texts: HashSet<&str> = test.iter().map(|e| e.text.as_str()).collect();
    let leaks = leaked(&train, &test_texts);
    if leaks > 0 {
        return Err(Error::FoldHygiene { fold, count: leaks });
    }

    let baseline_model = classifier.train::<T>(&train)?;
    let (train_not, train_off) = class_counts(&train);
    let mut results = vec![(
        evaluate(&baseline_model, &test),
        FoldResult {
            fold,
            n_test: test.len(),
            train_not,
            train_off,
            imbalance: imbalance_ratio(&train),
            n_expansion_tweets: 0,
            n_leaked_dropped: 0,
            hygiene_ok: true,
        },
    )];
    let mut traces = Vec::new();
    if keep_traces {
        traces.push(FoldTrace {
            fold,
            configuration: "baseline".into(),
            training_set: train.clone(),
        });
    }

    // selection uses a model that never saw the test fold
    let tagged_by_target: Vec<(&String, Vec<Tweet>, Vec<Prediction<T>>)> = targets
        .iter()
        .map(|t| {
            let replies = corpus::replies_to(reply_corpus, t);
            let preds = tag_replies(&baseline_model, &replies).into_iter().map(|(_, p)| p).collect();
            (t, replies, preds)
        })
        .collect();

    for cfg in expansions {
        let per_target = tagged_by_target
            .iter()
            .map(|(t, replies, preds)| {
                let tagged: Vec<(&Tweet, Prediction<T>)> = replies.iter().zip(preds.iter().copied()).collect();
                expand_from_tagged(&tagged, t, cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let merged = merge_expansions(&per_target);
        let before = merged.len();
        let merged: Vec<LabeledExample> = merged
            .into_iter()
            .filter(|e| !test_texts.contains(e.text.as_str()))
            .collect();
        let n_leaked_dropped = before - merged.len();
        let set = expand_training_set(&train, &merged);
        let leaks = leaked(&set.examples, &test_texts);
        if leaks > 0 {
            return Err(Error::FoldHygiene { fold, count: leaks });
        }
        let retrained;
        let model = if merged.is_empty() {
            &baseline_model
        } else {
            retrained = classifier.train::<T>(&set.examples)?;
            &retrained
        };
        results.push((
            evaluate(model, &test),
            FoldResult {
                fold,
                n_test: test.len(),
                train_not: set.n_not,
                train_off: set.n_off,
                imbalance: set.imbalance,
                n_expansion_tweets: set.examples.len() - train.len(),
                n_leaked_dropped,
                hygiene_ok: true,
            },
        ));
        if keep_traces {
            traces.push(FoldTrace {
                fold,
                configuration: cfg.strategy.label(),
                training_set: set.examples,
            });
        }
    }
    Ok(FoldOutcome { results, traces })
}

/// Global cross-validation with fold-internal expansion.
///
/// Within each fold the baseline is trained on the training folds only, the
/// whole reply corpus is tagged with it, users are selected per target and
/// all targets' expansions are added to the training folds. Expansion texts
/// equal to a test-fold text are dropped, and every training set is checked
/// against the test fold before use. Held-out predictions are pooled.
#[allow(clippy::too_many_arguments)]
pub fn run_global_cv_experiment<T: Scalar>(
    seed_set: &[LabeledExample],
    reply_corpus: &[Tweet],
    targets: &[String],
    classifier: &ClassifierConfig,
    expansions: &[ExpansionConfig],
    k: usize,
    seed: u64,
) -> Result<ExperimentReport<T>> {
    run_global_cv_inner(seed_set, reply_corpus, targets, classifier, expansions, k, seed, false)
        .map(|(r, _)| r)
}

/// [`run_global_cv_experiment`] that also returns every training set used.
#[allow(clippy::too_many_arguments)]
pub fn run_global_cv_experiment_traced<T: Scalar>(
    seed_set: &[LabeledExample],
    reply_corpus: &[Tweet],
    targets: &[String],
    classifier: &ClassifierConfig,
    expansions: &[ExpansionConfig],
    k: usize,
    seed: u64,
) -> Result<(ExperimentReport<T>, Vec<FoldTrace>)> {
    run_global_cv_inner(seed_set, reply_corpus, targets, classifier, expansions, k, seed, true)
}

#[allow(clippy::too_many_arguments)]
fn run_global_cv_inner<T: Scalar>(
    seed_set: &[LabeledExample],
    reply_corpus: &[Tweet],
    targets: &[String],
    classifier: &ClassifierConfig,
    expansions: &[ExpansionConfig],
    k: usize,
    seed: u64,
    keep_traces: bool,
) -> Result<(ExperimentReport<T>, Vec<FoldTrace>)> {
    for e in expansions {
        e.validate()?;
    }
    let (examples, dropped) = dedupe(seed_set.to_vec());
    let folds = stratified_folds(&examples, k, seed)?;
    let targets: Vec<String> = if targets.is_empty() {
        corpus::reply_targets(reply_corpus)
    } else {
        targets.to_vec()
    };
    let mut warnings = Vec::new();
    let mut skipped = Vec::new();
    for t in &targets {
        if corpus::replies_to(reply_corpus, t).is_empty() {
            warnings.push(format!("target {t} has no replies"));
            skipped.push(t.clone());
        }
    }

    let outcomes: Vec<FoldOutcome> = (0..k)
        .into_par_iter()
        .map(|f| {
            run_global_fold::<T>(f, &examples, &folds, reply_corpus, &targets, classifier, expansions, keep_traces)
        })
        .collect::<Result<_>>()?;

    let column = |c: usize| -> (ConfusionCounts, Vec<FoldResult>) {
        let mut pooled = ConfusionCounts::default();
        let mut rows = Vec::with_capacity(k);
        for o in &outcomes {
            let (counts, r) = &o.results[c];
            pooled.add(counts);
            rows.push(r.clone());
        }
        (pooled, rows)
    };

    let (pooled, fold_rows) = column(0);
    let before = pooled_ratio(fold_rows.iter().map(|r| (r.train_not, r.train_off)));
    let mut baseline = row("baseline".into(), None, metrics(&pooled));
    baseline.counts = Some(pooled);
    baseline.imbalance_before = before;
    baseline.folds = fold_rows;

    let expanded = expansions
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let (pooled, fold_rows) = column(c + 1);
            let m = metrics(&pooled);
            let mut r = row(cfg.strategy.label(), Some(*cfg), m);
            r.counts = Some(pooled);
            r.relative_f1_improvement = relative(&baseline.metrics, &m);
            r.expansion_volume = Some(
                fold_rows.iter().map(|f| f.n_expansion_tweets as f64).sum::<f64>()
                    / (fold_rows.len() as f64 * targets.len().max(1) as f64),
            );
            r.imbalance_before = before;
            r.imbalance_after = pooled_ratio(fold_rows.iter().map(|f| (f.train_not, f.train_off)));
            r.folds = fold_rows;
            r
        })
        .collect();

    let traces = outcomes.into_iter().flat_map(|o| o.traces).collect();
    Ok((
        ExperimentReport {
            protocol: Protocol::GlobalCv,
            tool_version: crate::VERSION.to_string(),
            classifier: *classifier,
            k: Some(k),
            seed: Some(seed),
            n_seed_examples: examples.len(),
            n_seed_duplicates_dropped: dropped,
            baseline,
            expanded,
            skipped_targets: skipped,
            warnings,
        },
        traces,
    ))
}
