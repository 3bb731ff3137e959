//! Deterministic synthetic corpora with planted antagonists.
//!
//! Seed examples are offensive only through the global lexicon. Every target
//! has its own slur lexicon, disjoint from the global one, that only appears
//! in replies: antagonists use it heavily, bystanders (almost) never. A seed
//! classifier therefore cannot know the slurs, which is exactly the gap the
//! expansion step is meant to close.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, LabeledExample, Tweet};
use crate::error::{Error, Result};
use crate::textpipe::normalize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_targets: usize,
    pub n_users_per_target: usize,
    pub antagonist_fraction: f64,
    /// Inclusive `[min, max]` replies per regular user.
    pub replies_per_user: (usize, usize),
    pub global_offense_lexicon: Vec<String>,
    pub per_target_slur_lexicon: BTreeMap<String, Vec<String>>,
    pub benign_lexicon: Vec<String>,
    pub seed_train_size: usize,
    pub seed_off_fraction: f64,

    #[serde(default = "defaults::test_replies_per_target")]
    pub test_replies_per_target: usize,
    /// One-off repliers per target; they never reach a min-replies floor above 1.
    #[serde(default = "defaults::drive_by_replies_per_target")]
    pub drive_by_replies_per_target: usize,
    #[serde(default = "defaults::drive_by_off_rate")]
    pub drive_by_off_rate: f64,
    #[serde(default = "defaults::antagonist_slur_rate")]
    pub antagonist_slur_rate: f64,
    #[serde(default = "defaults::antagonist_global_rate")]
    pub antagonist_global_rate: f64,
    #[serde(default)]
    pub bystander_slur_rate: f64,
    /// Inclusive `[min, max]` benign filler words per text.
    #[serde(default = "defaults::words_per_text")]
    pub words_per_text: (usize, usize),
}

mod defaults {
    pub fn test_replies_per_target() -> usize {
        300
    }
    pub fn drive_by_replies_per_target() -> usize {
        40
    }
    pub fn drive_by_off_rate() -> f64 {
        0.3
    }
    pub fn antagonist_slur_rate() -> f64 {
        0.9
    }
    pub fn antagonist_global_rate() -> f64 {
        0.6
    }
    pub fn words_per_text() -> (usize, usize) {
        (4, 9)
    }
}

// letters used for pseudo-words; includes the three normalization sources
const LETTERS: &[char] = &[
    'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ',
    'ف', 'ق', 'ك', 'ل', 'م', 'ن', 'ه', 'و', 'ي', 'ا', 'أ', 'إ', 'ة', 'ى',
];

fn pseudo_word(len: RangeInclusive<usize>, rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(len);
    (0..len)
        .map(|_| *LETTERS.choose(rng).expect("non-empty alphabet"))
        .collect()
}

impl SynthConfig {
    /// The standard fixture: 5 targets, 40 users each, 30% antagonists,
    /// a 1,000-example seed set at 20% OFF, 300 gold replies per target,
    /// generated lexicons.
    pub fn standard(seed: u64) -> Self {
        Self::with_lexicons(seed, 5, 40, 0.3, 1000, 0.2)
    }

    /// Builds a config with deterministically generated, mutually disjoint
    /// lexicons (20 global and 4 slurs per target of 5 to 7 letters, 300
    /// benign words of 3 to 6 letters).
    pub fn with_lexicons(
        seed: u64,
        n_targets: usize,
        n_users_per_target: usize,
        antagonist_fraction: f64,
        seed_train_size: usize,
        seed_off_fraction: f64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_1E71_C0DE);
        let mut used = HashSet::new();
        let mut fresh = |n: usize, len: RangeInclusive<usize>, rng: &mut ChaCha8Rng| -> Vec<String> {
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let w = normalize(&pseudo_word(len.clone(), rng));
                if used.insert(w.clone()) {
                    out.push(w);
                }
            }
            out
        };
        let global = fresh(20, 5..=7, &mut rng);
        let per_target: BTreeMap<String, Vec<String>> = (0..n_targets)
            .map(|t| (format!("@Target{t:02}"), fresh(4, 5..=7, &mut rng)))
            .collect();
        let benign = fresh(300, 3..=6, &mut rng);
        Self {
            seed,
            n_targets,
            n_users_per_target,
            antagonist_fraction,
            replies_per_user: (3, 10),
            global_offense_lexicon: global,
            per_target_slur_lexicon: per_target,
            benign_lexicon: benign,
            seed_train_size,
            seed_off_fraction,
            test_replies_per_target: defaults::test_replies_per_target(),
            drive_by_replies_per_target: defaults::drive_by_replies_per_target(),
            drive_by_off_rate: defaults::drive_by_off_rate(),
            antagonist_slur_rate: defaults::antagonist_slur_rate(),
            antagonist_global_rate: defaults::antagonist_global_rate(),
            bystander_slur_rate: 0.0,
            words_per_text: defaults::words_per_text(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_targets == 0 || self.n_targets != self.per_target_slur_lexicon.len() {
            return bad(format!(
                "n_targets={} but per_target_slur_lexicon has {} targets",
                self.n_targets,
                self.per_target_slur_lexicon.len()
            ));
        }
        for (name, p) in [
            ("antagonist_fraction", self.antagonist_fraction),
            ("drive_by_off_rate", self.drive_by_off_rate),
            ("antagonist_global_rate", self.antagonist_global_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name}={p} outside [0, 1]"));
            }
        }
        if !(0.9..=1.0).contains(&self.antagonist_slur_rate) {
            return bad("antagonist_slur_rate must be in [0.9, 1]".into());
        }
        if !(0.0..=0.05).contains(&self.bystander_slur_rate) {
            return bad("bystander_slur_rate must be in [0, 0.05]".into());
        }
        if !(self.seed_off_fraction > 0.0 && self.seed_off_fraction < 1.0) {
            return bad("seed_off_fraction must be in (0, 1)".into());
        }
        let (lo, hi) = self.replies_per_user;
        if lo == 0 || lo > hi {
            return bad(format!("replies_per_user ({lo}, {hi}) is not a valid range"));
        }
        let (lo, hi) = self.words_per_text;
        if lo == 0 || lo > hi {
            return bad(format!("words_per_text ({lo}, {hi}) is not a valid range"));
        }
        if self.global_offense_lexicon.is_empty() || self.benign_lexicon.is_empty() {
            return bad("lexicons must be non-empty".into());
        }

        let mut owner: BTreeMap<String, String> = BTreeMap::new();
        let mut claim = |word: &str, lexicon: &str| -> Result<()> {
            let w = normalize(word);
            if w.is_empty() || w.contains(' ') {
                return Err(Error::InvalidConfig(format!(
                    "lexicon entry {word:?} in {lexicon} must be a single non-empty token"
                )));
            }
            if let Some(prev) = owner.insert(w, lexicon.to_string()) {
                if prev != lexicon {
                    return Err(Error::InvalidConfig(format!(
                        "word {word:?} appears in both {prev} and {lexicon}"
                    )));
                }
            }
            Ok(())
        };
        for w in &self.global_offense_lexicon {
            claim(w, "global_offense_lexicon")?;
        }
        for (target, slurs) in &self.per_target_slur_lexicon {
            if slurs.is_empty() {
                return bad(format!("empty slur lexicon for {target}"));
            }
            for w in slurs {
                claim(w, &format!("per_target_slur_lexicon[{target}]"))?;
            }
        }
        for w in &self.benign_lexicon {
            claim(w, "benign_lexicon")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub seed_train: Vec<LabeledExample>,
    pub replies: Vec<Tweet>,
    pub gold_tests: BTreeMap<String, Vec<LabeledExample>>,
}

struct Lexicons {
    global: Vec<String>,
    benign: Vec<String>,
    slurs: BTreeMap<String, Vec<String>>,
    offensive_tokens: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Clone, Copy)]
enum Role {
    Antagonist,
    Bystander,
    DriveBy,
}

struct Composer<'a> {
    cfg: &'a SynthConfig,
    lex: &'a Lexicons,
}

impl Composer<'_> {
    fn filler(&self, rng: &mut ChaCha8Rng) -> Vec<String> {
        let (lo, hi) = self.cfg.words_per_text;
        let n = rng.gen_range(lo..=hi);
        (0..n)
            .map(|_| self.lex.benign.choose(rng).expect("benign lexicon").clone())
            .collect()
    }

    fn insert(words: &mut Vec<String>, word: &str, rng: &mut ChaCha8Rng) {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, word.to_string());
    }

    fn seed_text(&self, offensive: bool, rng: &mut ChaCha8Rng) -> String {
        let mut words = self.filler(rng);
        if offensive {
            let n = rng.gen_range(1..=2);
            for _ in 0..n {
                let g = self.lex.global.choose(rng).expect("global lexicon").clone();
                Self::insert(&mut words, &g, rng);
            }
        }
        words.join(" ")
    }

    fn reply_text(&self, target: &str, role: Role, rng: &mut ChaCha8Rng) -> String {
        let (slur_p, global_p) = match role {
            Role::Antagonist => (self.cfg.antagonist_slur_rate, self.cfg.antagonist_global_rate),
            Role::Bystander => (self.cfg.bystander_slur_rate, 0.0),
            Role::DriveBy => (0.0, self.cfg.drive_by_off_rate),
        };
        let mut words = self.filler(rng);
        if rng.gen::<f64>() < slur_p {
            let s = self.lex.slurs[target].choose(rng).expect("slur lexicon").clone();
            Self::insert(&mut words, &s, rng);
        }
        if rng.gen::<f64>() < global_p {
            let g = self.lex.global.choose(rng).expect("global lexicon").clone();
            Self::insert(&mut words, &g, rng);
        }
        words.join(" ")
    }

    /// Target-directed gold label: OFF iff a global word or this target's slur occurs.
    fn gold_label(&self, target: &str, text: &str) -> Label {
        let bad = &self.lex.offensive_tokens[target];
        if text.split(' ').any(|w| bad.contains(w)) {
            Label::Off
        } else {
            Label::Not
        }
    }
}

struct User {
    handle: String,
    role: Role,
    n_replies: usize,
}

/// Generates the seed training set, the reply corpus and per-target gold test
/// sets. Output is a pure function of `config`.
pub fn synth_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let norm = |ws: &[String]| ws.iter().map(|w| normalize(w)).collect::<Vec<_>>();
    let slurs: BTreeMap<String, Vec<String>> = config
        .per_target_slur_lexicon
        .iter()
        .map(|(t, ws)| (t.clone(), norm(ws)))
        .collect();
    let global = norm(&config.global_offense_lexicon);
    let offensive_tokens = slurs
        .iter()
        .map(|(t, ws)| (t.clone(), ws.iter().chain(&global).cloned().collect()))
        .collect();
    let lex = Lexicons {
        global,
        benign: norm(&config.benign_lexicon),
        slurs,
        offensive_tokens,
    };
    let composer = Composer { cfg: config, lex: &lex };

    let stream = |s: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(config.seed);
        r.set_stream(s);
        r
    };

    // seed training set: exact OFF count, distinct texts
    let mut rng = stream(1);
    let n_off = (config.seed_train_size as f64 * config.seed_off_fraction).round() as usize;
    let mut seen = HashSet::new();
    let mut seed_train = Vec::with_capacity(config.seed_train_size);
    for i in 0..config.seed_train_size {
        let offensive = i < n_off;
        let text = loop {
            let t = composer.seed_text(offensive, &mut rng);
            if seen.insert(t.clone()) {
                break t;
            }
        };
        let label = if offensive { Label::Off } else { Label::Not };
        seed_train.push(LabeledExample::seed(&text, label));
    }
    seed_train.shuffle(&mut rng);

    // users and reply corpus
    let mut rng = stream(2);
    let mut users: BTreeMap<String, Vec<User>> = BTreeMap::new();
    for (ti, target) in lex.slurs.keys().enumerate() {
        let n_antagonists =
            (config.n_users_per_target as f64 * config.antagonist_fraction).round() as usize;
        let mut roles: Vec<bool> = (0..config.n_users_per_target)
            .map(|j| j < n_antagonists)
            .collect();
        roles.shuffle(&mut rng);
        let (lo, hi) = config.replies_per_user;
        let mut pool: Vec<User> = roles
            .into_iter()
            .enumerate()
            .map(|(j, antagonist)| User {
                handle: format!("t{ti:02}_user{j:03}"),
                role: if antagonist { Role::Antagonist } else { Role::Bystander },
                n_replies: rng.gen_range(lo..=hi),
            })
            .collect();
        pool.extend((0..config.drive_by_replies_per_target).map(|j| User {
            handle: format!("t{ti:02}_once{j:03}"),
            role: Role::DriveBy,
            n_replies: 1,
        }));
        users.insert(target.clone(), pool);
    }
    let mut replies = Vec::new();
    for (target, pool) in &users {
        for u in pool {
            for _ in 0..u.n_replies {
                replies.push(Tweet {
                    id: String::new(),
                    author: u.handle.clone(),
                    reply_to: Some(target.clone()),
                    text: composer.reply_text(target, u.role, &mut rng),
                });
            }
        }
    }
    replies.shuffle(&mut rng);
    for (i, t) in replies.iter_mut().enumerate() {
        t.id = format!("r{i:07}");
    }

    // gold tests: fresh replies drawn in proportion to each user's volume
    let mut rng = stream(3);
    let mut gold_tests = BTreeMap::new();
    for (target, pool) in &users {
        let volume: Vec<usize> = pool.iter().map(|u| u.n_replies).collect();
        let total: usize = volume.iter().sum();
        let mut tests = Vec::with_capacity(config.test_replies_per_target);
        for _ in 0..config.test_replies_per_target {
            let mut pick = rng.gen_range(0..total);
            let user = volume
                .iter()
                .position(|&v| {
                    if pick < v {
                        true
                    } else {
                        pick -= v;
                        false
                    }
                })
                .expect("pick within total volume");
            let text = normalize(&composer.reply_text(target, pool[user].role, &mut rng));
            let label = composer.gold_label(target, &text);
            tests.push(LabeledExample::seed(&text, label));
        }
        gold_tests.insert(target.clone(), tests);
    }

    Ok(SynthCorpus {
        seed_train,
        replies,
        gold_tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::class_counts;

    fn small(seed: u64, antagonist_fraction: f64) -> SynthConfig {
        SynthConfig::with_lexicons(seed, 3, 12, antagonist_fraction, 100, 0.2)
    }

    #[test]
    fn deterministic_bytes() {
        let cfg = small(3, 0.3);
        let a = serde_json::to_vec(&synth_corpus(&cfg).unwrap()).unwrap();
        let b = serde_json::to_vec(&synth_corpus(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_vec(&synth_corpus(&small(4, 0.3)).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn exact_seed_off_count() {
        let c = synth_corpus(&small(1, 0.3)).unwrap();
        assert_eq!(c.seed_train.len(), 100);
        assert_eq!(class_counts(&c.seed_train), (80, 20));
    }

    #[test]
    fn sizes_match_config() {
        let cfg = small(2, 0.25);
        let c = synth_corpus(&cfg).unwrap();
        assert_eq!(c.gold_tests.len(), 3);
        assert!(c.gold_tests.values().all(|v| v.len() == cfg.test_replies_per_target));
        let per_target = crate::corpus::replies_to(&c.replies, "@Target00");
        let regular: HashSet<_> = per_target
            .iter()
            .filter(|t| t.author.contains("_user"))
            .map(|t| t.author.clone())
            .collect();
        assert_eq!(regular.len(), 12);
    }

    #[test]
    fn no_antagonists_means_no_slurs() {
        let cfg = small(5, 0.0);
        let c = synth_corpus(&cfg).unwrap();
        let slurs: HashSet<String> = cfg
            .per_target_slur_lexicon
            .values()
            .flatten()
            .map(|w| normalize(w))
            .collect();
        let global: HashSet<String> = cfg.global_offense_lexicon.iter().map(|w| normalize(w)).collect();
        let mut slur_hits = 0;
        for tests in c.gold_tests.values() {
            for e in tests {
                let has_slur = e.text.split(' ').any(|w| slurs.contains(w));
                let has_global = e.text.split(' ').any(|w| global.contains(w));
                slur_hits += usize::from(has_slur);
                if e.label.is_off() {
                    assert!(has_global);
                }
            }
        }
        assert_eq!(slur_hits, 0);
        assert!(c.replies.iter().all(|t| !t.text.split(' ').any(|w| slurs.contains(w))));
    }

    #[test]
    fn antagonists_use_slurs() {
        let cfg = small(6, 0.5);
        let c = synth_corpus(&cfg).unwrap();
        let slurs: HashSet<String> = cfg.per_target_slur_lexicon["@Target01"]
            .iter()
            .map(|w| normalize(w))
            .collect();
        let replies = crate::corpus::replies_to(&c.replies, "@Target01");
        let with_slur = replies
            .iter()
            .filter(|t| t.text.split(' ').any(|w| slurs.contains(w)))
            .count();
        // 6 of 12 regular users are antagonists; slurs appear in a large share
        assert!(with_slur > replies.len() / 5, "{with_slur} of {}", replies.len());
    }

    #[test]
    fn overlapping_lexicons_rejected() {
        let mut cfg = small(1, 0.3);
        let w = cfg.global_offense_lexicon[0].clone();
        cfg.benign_lexicon.push(w);
        assert!(matches!(synth_corpus(&cfg), Err(Error::InvalidConfig(_))));

        let mut cfg = small(1, 0.3);
        let w = cfg.per_target_slur_lexicon["@Target00"][0].clone();
        cfg.per_target_slur_lexicon.get_mut("@Target01").unwrap().push(w);
        assert!(synth_corpus(&cfg).is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = small(9, 0.3);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SynthConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
