//! Data model, JSON Lines ingestion, deduplication, stratified folds and the
//! synthetic corpus generator.

mod folds;
mod io;
mod synth;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::textpipe::normalize;

pub use folds::{stratified_folds, FoldAssignment};
pub use io::{
    load_gold_tests, load_labeled, load_tweets, write_gold_tests, write_labeled, write_tweets,
};
pub use synth::{synth_corpus, SynthConfig, SynthCorpus};

/// One post: a reply to `reply_to` when set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    #[serde(rename = "user")]
    pub author: String,
    pub reply_to: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "OFF")]
    Off,
    #[serde(rename = "NOT")]
    Not,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Off => "OFF",
            Label::Not => "NOT",
        }
    }

    pub fn is_off(self) -> bool {
        self == Label::Off
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    /// Case-insensitive: "off", "Off" and "OFF" all parse.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OFF" => Ok(Label::Off),
            "NOT" => Ok(Label::Not),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    #[default]
    Seed,
    Expansion,
}

/// Training or test example. `text` is always in normalized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text: String,
    pub label: Label,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_target: Option<String>,
}

impl LabeledExample {
    /// A manually labeled example; the text is normalized here.
    pub fn seed(text: &str, label: Label) -> Self {
        Self {
            text: normalize(text),
            label,
            provenance: Provenance::Seed,
            source_target: None,
        }
    }

    /// An assumed-offensive example taken from a selected user's reply.
    pub fn expansion(text: &str, target: &str) -> Self {
        Self {
            text: normalize(text),
            label: Label::Off,
            provenance: Provenance::Expansion,
            source_target: Some(target.to_string()),
        }
    }
}

/// Canonical account handle: trimmed, leading '@' removed, lowercased.
pub fn canonical_handle(handle: &str) -> String {
    let h = handle.trim();
    h.strip_prefix('@').unwrap_or(h).to_lowercase()
}

pub fn same_handle(a: &str, b: &str) -> bool {
    canonical_handle(a) == canonical_handle(b)
}

/// Tweets replying to `target`, in input order.
pub fn replies_to(tweets: &[Tweet], target: &str) -> Vec<Tweet> {
    let target = canonical_handle(target);
    tweets
        .iter()
        .filter(|t| {
            t.reply_to
                .as_deref()
                .is_some_and(|r| canonical_handle(r) == target)
        })
        .cloned()
        .collect()
}

/// Distinct reply targets in first-seen order (first spelling kept).
pub fn reply_targets(tweets: &[Tweet]) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for t in tweets {
        if let Some(r) = &t.reply_to {
            if seen.insert(canonical_handle(r)) {
                out.push(r.clone());
            }
        }
    }
    out
}

/// Keeps the first occurrence of every text, whatever its label.
/// Returns the survivors and the number of dropped duplicates.
pub fn dedupe(examples: Vec<LabeledExample>) -> (Vec<LabeledExample>, usize) {
    let before = examples.len();
    let mut seen = HashSet::with_capacity(before);
    let kept: Vec<LabeledExample> = examples
        .into_iter()
        .filter(|e| seen.insert(e.text.clone()))
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// (NOT count, OFF count).
pub fn class_counts(examples: &[LabeledExample]) -> (usize, usize) {
    let off = examples.iter().filter(|e| e.label.is_off()).count();
    (examples.len() - off, off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tweet(id: &str, author: &str, reply_to: Option<&str>) -> Tweet {
        Tweet {
            id: id.into(),
            author: author.into(),
            reply_to: reply_to.map(Into::into),
            text: format!("text {id}"),
        }
    }

    #[test]
    fn label_parse_case_insensitive() {
        assert_eq!("off".parse::<Label>().unwrap(), Label::Off);
        assert_eq!("Not".parse::<Label>().unwrap(), Label::Not);
        assert!(matches!("MAYBE".parse::<Label>(), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn replies_to_filters_in_order() {
        let ts = vec![
            tweet("1", "a", Some("@T")),
            tweet("2", "b", None),
            tweet("3", "c", Some("@X")),
            tweet("4", "d", Some("@T")),
        ];
        let ids: Vec<_> = replies_to(&ts, "@T").into_iter().map(|t| t.id).collect();
        assert_eq!(ids, ["1", "4"]);
        assert!(replies_to(&ts, "@nobody").is_empty());
    }

    #[test]
    fn replies_to_case_insensitive() {
        let ts = vec![tweet("1", "a", Some("@t")), tweet("2", "a", Some("T"))];
        assert_eq!(replies_to(&ts, "@T").len(), 2);
    }

    #[test]
    fn dedupe_keeps_first() {
        let xs = vec![
            LabeledExample::seed("same", Label::Off),
            LabeledExample::seed("same", Label::Not),
        ];
        let (kept, dropped) = dedupe(xs);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].label, Label::Off);
        assert_eq!(dropped, 1);
    }

    #[test]
    fn dedupe_identity_and_copies() {
        let xs: Vec<_> = ["a", "b", "c"]
            .iter()
            .map(|t| LabeledExample::seed(t, Label::Not))
            .collect();
        assert_eq!(dedupe(xs.clone()).0, xs);
        let copies = vec![LabeledExample::seed("x", Label::Not); 7];
        assert_eq!(dedupe(copies).0.len(), 1);
    }

    proptest! {
        #[test]
        fn dedupe_idempotent(texts in prop::collection::vec("[ab]{0,3}", 0..30), offs in prop::collection::vec(any::<bool>(), 30)) {
            let xs: Vec<_> = texts.iter().zip(&offs)
                .map(|(t, &o)| LabeledExample::seed(t, if o { Label::Off } else { Label::Not }))
                .collect();
            let once = dedupe(xs).0;
            prop_assert_eq!(dedupe(once.clone()).0, once);
        }

        #[test]
        fn replies_partition_corpus(shape in prop::collection::vec(prop::option::of(0u8..4), 0..40)) {
            let names = ["@A", "b", "@C", "@a"];
            let ts: Vec<_> = shape.iter().enumerate()
                .map(|(i, r)| tweet(&i.to_string(), "u", r.map(|k| names[k as usize])))
                .collect();
            let targets = reply_targets(&ts);
            let covered: usize = targets.iter().map(|t| replies_to(&ts, t).len()).sum();
            let no_reply = ts.iter().filter(|t| t.reply_to.is_none()).count();
            prop_assert_eq!(covered + no_reply, ts.len());
        }
    }
}
