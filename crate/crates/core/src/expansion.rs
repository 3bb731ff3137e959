//! Most-offensive-user selection and training-set expansion.
//!
//! Replies to a target are tagged by a seed classifier; users who reply
//! frequently and are tagged offensive often enough are selected, and every
//! one of their replies to that target becomes an OFF training example,
//! including the replies the classifier tagged NOT.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierModel, Prediction};
use crate::corpus::{self, canonical_handle, class_counts, LabeledExample, Tweet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTargetStats {
    pub user: String,
    pub target: String,
    pub n_replies: usize,
    pub n_offensive: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExpansionStrategy {
    /// Users with at least this share of replies tagged OFF.
    FractionAtLeast(f64),
    /// The n users with the most OFF-tagged replies.
    TopN(usize),
}

impl ExpansionStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ExpansionStrategy::FractionAtLeast(t) if !(t > 0.0 && t <= 1.0) => Err(
                Error::InvalidConfig(format!("fraction threshold {t} outside (0, 1]")),
            ),
            ExpansionStrategy::TopN(0) => {
                Err(Error::InvalidConfig("top-n requires n >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Row label used in rendered tables: "50%", "top 10".
    pub fn label(&self) -> String {
        match *self {
            ExpansionStrategy::FractionAtLeast(t) => format!("{}%", t * 100.0),
            ExpansionStrategy::TopN(n) => format!("top {n}"),
        }
    }
}

impl fmt::Display for ExpansionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpansionStrategy::FractionAtLeast(t) => write!(f, "frac:{t}"),
            ExpansionStrategy::TopN(n) => write!(f, "top:{n}"),
        }
    }
}

impl FromStr for ExpansionStrategy {
    type Err = Error;

    /// Parses `frac:<θ>` or `top:<n>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unparsable strategy {s:?} (expected frac:<θ> or top:<n>)"));
        let (kind, value) = s.trim().split_once(':').ok_or_else(bad)?;
        let strategy = match kind {
            "frac" => ExpansionStrategy::FractionAtLeast(value.parse().map_err(|_| bad())?),
            "top" => ExpansionStrategy::TopN(value.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub strategy: ExpansionStrategy,
    #[serde(default = "default_min_replies")]
    pub min_replies: usize,
}

fn default_min_replies() -> usize {
    3
}

impl ExpansionConfig {
    pub fn new(strategy: ExpansionStrategy) -> Self {
        Self {
            strategy,
            min_replies: default_min_replies(),
        }
    }

    pub fn with_min_replies(mut self, min_replies: usize) -> Self {
        self.min_replies = min_replies;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_replies == 0 {
            return Err(Error::InvalidConfig("min_replies must be >= 1".into()));
        }
        self.strategy.validate()
    }
}

/// Tags every reply with the model, in order.
pub fn tag_replies<'a, T: Scalar>(
    model: &ClassifierModel<T>,
    replies: &'a [Tweet],
) -> Vec<(&'a Tweet, Prediction<T>)> {
    replies
        .par_iter()
        .map(|t| (t, model.predict(&t.text)))
        .collect()
}

/// Per-author reply and OFF-tag counts, in first-seen author order.
pub fn user_stats<T>(
    tagged: &[(&Tweet, Prediction<T>)],
    target: &str,
) -> Result<Vec<UserTargetStats>> {
    let canonical_target = canonical_handle(target);
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<UserTargetStats> = Vec::new();
    for (tweet, pred) in tagged {
        let to = tweet.reply_to.as_deref().unwrap_or("");
        if canonical_handle(to) != canonical_target {
            return Err(Error::ReplyTargetMismatch {
                id: tweet.id.clone(),
                expected: target.to_string(),
                found: to.to_string(),
            });
        }
        let user = canonical_handle(&tweet.author);
        let slot = *index.entry(user.clone()).or_insert_with(|| {
            out.push(UserTargetStats {
                user,
                target: target.to_string(),
                n_replies: 0,
                n_offensive: 0,
                fraction: 0.0,
            });
            out.len() - 1
        });
        let s = &mut out[slot];
        s.n_replies += 1;
        s.n_offensive += usize::from(pred.label.is_off());
    }
    for s in &mut out {
        s.fraction = s.n_offensive as f64 / s.n_replies as f64;
    }
    Ok(out)
}

/// `a.fraction` vs `b.fraction`, compared exactly as rationals.
fn cmp_fraction(a: &UserTargetStats, b: &UserTargetStats) -> Ordering {
    (a.n_offensive * b.n_replies).cmp(&(b.n_offensive * a.n_replies))
}

/// The "most offensive" users under `config`, best first.
///
/// Users below `min_replies` are excluded first, as are users with no
/// OFF-tagged reply at all. `FractionAtLeast(θ)` keeps every user whose
/// fraction is at least θ, ordered by (fraction desc, n_offensive desc,
/// handle asc). `TopN(n)` takes the first n users ordered by (n_offensive
/// desc, fraction desc, handle asc).
pub fn select_offensive_users(stats: &[UserTargetStats], config: &ExpansionConfig) -> Vec<String> {
    let mut pool: Vec<&UserTargetStats> = stats
        .iter()
        .filter(|s| s.n_replies >= config.min_replies && s.n_offensive > 0)
        .collect();
    match config.strategy {
        ExpansionStrategy::FractionAtLeast(theta) => {
            pool.retain(|s| s.n_offensive as f64 >= theta * s.n_replies as f64);
            pool.sort_by(|a, b| {
                cmp_fraction(b, a)
                    .then(b.n_offensive.cmp(&a.n_offensive))
                    .then_with(|| a.user.cmp(&b.user))
            });
        }
        ExpansionStrategy::TopN(n) => {
            pool.sort_by(|a, b| {
                b.n_offensive
                    .cmp(&a.n_offensive)
                    .then(cmp_fraction(b, a))
                    .then_with(|| a.user.cmp(&b.user))
            });
            pool.truncate(n);
        }
    }
    pool.into_iter().map(|s| s.user.clone()).collect()
}

/// Every reply to `target` by a selected user, as an OFF expansion example,
/// deduplicated by normalized text.
pub fn expand(replies: &[Tweet], selected: &[String], target: &str) -> Vec<LabeledExample> {
    let chosen: HashSet<String> = selected.iter().map(|u| canonical_handle(u)).collect();
    let canonical_target = canonical_handle(target);
    let examples: Vec<LabeledExample> = replies
        .iter()
        .filter(|t| {
            t.reply_to
                .as_deref()
                .is_some_and(|r| canonical_handle(r) == canonical_target)
                && chosen.contains(&canonical_handle(&t.author))
        })
        .map(|t| LabeledExample::expansion(&t.text, target))
        .filter(|e| !e.text.is_empty())
        .collect();
    corpus::dedupe(examples).0
}

/// NOT:OFF ratio; `None` when there are no OFF examples.
pub fn imbalance_ratio(examples: &[LabeledExample]) -> Option<f64> {
    let (n_not, n_off) = class_counts(examples);
    (n_off > 0).then(|| n_not as f64 / n_off as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandedTrainingSet {
    pub examples: Vec<LabeledExample>,
    pub n_dropped: usize,
    pub n_not: usize,
    pub n_off: usize,
    pub imbalance: Option<f64>,
}

/// Seed followed by expansion, deduplicated so seed copies win collisions.
pub fn expand_training_set(
    seed_set: &[LabeledExample],
    expansion: &[LabeledExample],
) -> ExpandedTrainingSet {
    let all: Vec<LabeledExample> = seed_set.iter().chain(expansion).cloned().collect();
    let (examples, n_dropped) = corpus::dedupe(all);
    let (n_not, n_off) = class_counts(&examples);
    let imbalance = imbalance_ratio(&examples);
    ExpandedTrainingSet {
        examples,
        n_dropped,
        n_not,
        n_off,
        imbalance,
    }
}

/// Outcome of the tag → stats → select → expand chain for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetExpansion {
    pub target: String,
    pub n_replies: usize,
    pub selected: Vec<String>,
    pub examples: Vec<LabeledExample>,
}

/// Sidecar record written next to an expansion file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionSummary {
    pub target: String,
    pub strategy: String,
    pub min_replies: usize,
    pub n_selected_users: usize,
    pub n_expansion_tweets: usize,
}

impl TargetExpansion {
    pub fn summary(&self, config: &ExpansionConfig) -> ExpansionSummary {
        ExpansionSummary {
            target: self.target.clone(),
            strategy: config.strategy.to_string(),
            min_replies: config.min_replies,
            n_selected_users: self.selected.len(),
            n_expansion_tweets: self.examples.len(),
        }
    }
}

/// Runs the full per-target chain against an already tagged reply list.
pub fn expand_from_tagged<T>(
    tagged: &[(&Tweet, Prediction<T>)],
    target: &str,
    config: &ExpansionConfig,
) -> Result<TargetExpansion> {
    let stats = user_stats(tagged, target)?;
    let selected = select_offensive_users(&stats, config);
    let replies: Vec<Tweet> = tagged.iter().map(|(t, _)| (*t).clone()).collect();
    let examples = expand(&replies, &selected, target);
    Ok(TargetExpansion {
        target: target.to_string(),
        n_replies: tagged.len(),
        selected,
        examples,
    })
}

/// Tags the replies to `target` in `corpus` and expands them.
pub fn expand_target<T: Scalar>(
    model: &ClassifierModel<T>,
    corpus: &[Tweet],
    target: &str,
    config: &ExpansionConfig,
) -> Result<TargetExpansion> {
    config.validate()?;
    let replies = corpus::replies_to(corpus, target);
    let tagged = tag_replies(model, &replies);
    expand_from_tagged(&tagged, target, config)
}

/// Unions per-target expansions: sorted by (target, text), then deduplicated.
pub fn merge_expansions(expansions: &[TargetExpansion]) -> Vec<LabeledExample> {
    let mut all: Vec<LabeledExample> = expansions
        .iter()
        .flat_map(|e| e.examples.iter().cloned())
        .collect();
    all.sort_by(|a, b| {
        a.source_target
            .cmp(&b.source_target)
            .then_with(|| a.text.cmp(&b.text))
    });
    corpus::dedupe(all).0
}
