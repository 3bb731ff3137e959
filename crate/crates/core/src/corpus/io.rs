use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{canonical_handle, Label, LabeledExample, Provenance, Tweet};
use crate::error::{Error, Result};
use crate::textpipe::normalize;
use crate::write_atomic;

#[derive(Deserialize)]
struct TweetRecord {
    id: String,
    user: String,
    #[serde(default)]
    reply_to: Option<String>,
    text: String,
}

#[derive(Deserialize)]
struct LabeledRecord {
    text: String,
    label: String,
    #[serde(default)]
    provenance: Option<Provenance>,
    #[serde(default)]
    source_target: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct GoldRecord {
    target: String,
    text: String,
    label: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with 1-based line numbers.
fn records(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse<'a, R: Deserialize<'a>>(line_no: usize, line: &'a str) -> Result<R> {
    serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })
}

fn at_line(line: usize, err: Error) -> Error {
    match err {
        Error::Parse { .. } => err,
        other => Error::Parse {
            line,
            message: other.to_string(),
        },
    }
}

/// Reads a tweets JSON Lines file, keeping file order and rejecting duplicate ids.
pub fn load_tweets(path: impl AsRef<Path>) -> Result<Vec<Tweet>> {
    let content = read(path.as_ref())?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, raw) in records(&content) {
        let r: TweetRecord = parse(line, raw)?;
        if r.id.is_empty() {
            return Err(at_line(line, Error::InvalidConfig("empty tweet id".into())));
        }
        if r.text.trim().is_empty() {
            return Err(at_line(line, Error::EmptyText));
        }
        if !seen.insert(r.id.clone()) {
            return Err(Error::DuplicateId { line, id: r.id });
        }
        out.push(Tweet {
            id: r.id,
            author: r.user,
            reply_to: r.reply_to,
            text: r.text,
        });
    }
    Ok(out)
}

pub fn write_tweets(path: impl AsRef<Path>, tweets: &[Tweet]) -> Result<()> {
    let mut buf = String::new();
    for t in tweets {
        buf.push_str(&serde_json::to_string(t).expect("tweet serializes"));
        buf.push('\n');
    }
    write_atomic(path.as_ref(), buf.as_bytes())
}

/// Reads a labeled JSON Lines file. Texts are normalized; records without a
/// `provenance` key are SEED.
pub fn load_labeled(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>> {
    let content = read(path.as_ref())?;
    let mut out = Vec::new();
    for (line, raw) in records(&content) {
        let r: LabeledRecord = parse(line, raw)?;
        let label: Label = r.label.parse().map_err(|e| at_line(line, e))?;
        let text = normalize(&r.text);
        if text.is_empty() {
            return Err(at_line(line, Error::EmptyText));
        }
        out.push(LabeledExample {
            text,
            label,
            provenance: r.provenance.unwrap_or_default(),
            source_target: r.source_target,
        });
    }
    Ok(out)
}

pub fn write_labeled(path: impl AsRef<Path>, examples: &[LabeledExample]) -> Result<()> {
    let mut buf = String::new();
    for e in examples {
        buf.push_str(&serde_json::to_string(e).expect("example serializes"));
        buf.push('\n');
    }
    write_atomic(path.as_ref(), buf.as_bytes())
}

/// Reads per-target gold test sets: JSON Lines with "target", "text", "label".
/// Targets are grouped case-insensitively under their first spelling.
pub fn load_gold_tests(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<LabeledExample>>> {
    let content = read(path.as_ref())?;
    let mut spelling: BTreeMap<String, String> = BTreeMap::new();
    let mut out: BTreeMap<String, Vec<LabeledExample>> = BTreeMap::new();
    for (line, raw) in records(&content) {
        let r: GoldRecord = parse(line, raw)?;
        let label: Label = r.label.parse().map_err(|e| at_line(line, e))?;
        let text = normalize(&r.text);
        if text.is_empty() {
            return Err(at_line(line, Error::EmptyText));
        }
        let key = spelling
            .entry(canonical_handle(&r.target))
            .or_insert_with(|| r.target.clone())
            .clone();
        out.entry(key).or_default().push(LabeledExample {
            text,
            label,
            provenance: Provenance::Seed,
            source_target: None,
        });
    }
    Ok(out)
}

pub fn write_gold_tests(
    path: impl AsRef<Path>,
    tests: &BTreeMap<String, Vec<LabeledExample>>,
) -> Result<()> {
    let mut buf = String::new();
    for (target, examples) in tests {
        for e in examples {
            let rec = GoldRecord {
                target: target.clone(),
                text: e.text.clone(),
                label: e.label.as_str().to_string(),
            };
            buf.push_str(&serde_json::to_string(&rec).expect("gold record serializes"));
            buf.push('\n');
        }
    }
    write_atomic(path.as_ref(), buf.as_bytes())
}
