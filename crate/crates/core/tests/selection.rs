use std::collections::HashSet;

use offexpand::classifiers::Prediction;
use offexpand::expansion::{expand, select_offensive_users, user_stats};
use offexpand::{ExpansionConfig, ExpansionStrategy, Label, Provenance, Tweet, UserTargetStats};
use proptest::prelude::*;

fn st(user: &str, n_offensive: usize, n_replies: usize) -> UserTargetStats {
    UserTargetStats {
        user: user.into(),
        target: "@t".into(),
        n_replies,
        n_offensive,
        fraction: n_offensive as f64 / n_replies as f64,
    }
}

fn cfg(strategy: ExpansionStrategy, min_replies: usize) -> ExpansionConfig {
    ExpansionConfig::new(strategy).with_min_replies(min_replies)
}

/// Filter, then order by comparing every pair: a user's rank is the number
/// of users that beat it.
fn oracle(stats: &[UserTargetStats], config: &ExpansionConfig) -> Vec<String> {
    let eligible: Vec<&UserTargetStats> = stats
        .iter()
        .filter(|s| s.n_replies >= config.min_replies && s.n_offensive >= 1)
        .filter(|s| match config.strategy {
            // s.n_offensive / s.n_replies >= theta
            ExpansionStrategy::FractionAtLeast(theta) => {
                s.n_offensive as f64 / s.n_replies as f64 >= theta
                    || (s.n_offensive as f64 - theta * s.n_replies as f64).abs() < 1e-12
            }
            ExpansionStrategy::TopN(_) => true,
        })
        .collect();
    let frac_gt = |a: &UserTargetStats, b: &UserTargetStats| {
        (a.n_offensive as u128) * (b.n_replies as u128) > (b.n_offensive as u128) * (a.n_replies as u128)
    };
    let frac_eq = |a: &UserTargetStats, b: &UserTargetStats| !frac_gt(a, b) && !frac_gt(b, a);
    let beats = |a: &UserTargetStats, b: &UserTargetStats| match config.strategy {
        ExpansionStrategy::FractionAtLeast(_) => {
            frac_gt(a, b)
                || (frac_eq(a, b) && a.n_offensive > b.n_offensive)
                || (frac_eq(a, b) && a.n_offensive == b.n_offensive && a.user < b.user)
        }
        ExpansionStrategy::TopN(_) => {
            a.n_offensive > b.n_offensive
                || (a.n_offensive == b.n_offensive && frac_gt(a, b))
                || (a.n_offensive == b.n_offensive && frac_eq(a, b) && a.user < b.user)
        }
    };
    let mut ranked: Vec<(usize, &UserTargetStats)> = eligible
        .iter()
        .map(|s| (eligible.iter().filter(|o| beats(o, s)).count(), *s))
        .collect();
    ranked.sort_by_key(|(rank, _)| *rank);
    let mut out: Vec<String> = ranked.into_iter().map(|(_, s)| s.user.clone()).collect();
    if let ExpansionStrategy::TopN(n) = config.strategy {
        out.truncate(n);
    }
    out
}

#[test]
fn fraction_example() {
    let stats = [st("u1", 5, 5), st("u2", 1, 10), st("u3", 3, 4)];
    let got = select_offensive_users(&stats, &cfg(ExpansionStrategy::FractionAtLeast(0.5), 3));
    assert_eq!(got, ["u1", "u3"]);
}

#[test]
fn top_n_example() {
    let stats = [st("u1", 5, 5), st("u2", 1, 10), st("u3", 3, 4)];
    let got = select_offensive_users(&stats, &cfg(ExpansionStrategy::TopN(2), 1));
    assert_eq!(got, ["u1", "u3"]);
}

#[test]
fn top_n_tie_broken_by_fraction_then_handle() {
    let stats = [st("low", 4, 10), st("high", 4, 5)];
    assert_eq!(select_offensive_users(&stats, &cfg(ExpansionStrategy::TopN(1), 1)), ["high"]);
    let stats = [st("b", 2, 4), st("a", 1, 2)];
    assert_eq!(select_offensive_users(&stats, &cfg(ExpansionStrategy::TopN(1), 1)), ["b"]);
    let stats = [st("b", 2, 4), st("a", 2, 4)];
    assert_eq!(select_offensive_users(&stats, &cfg(ExpansionStrategy::TopN(2), 1)), ["a", "b"]);
}

#[test]
fn fewer_than_n_returns_all() {
    let stats = [st("a", 1, 3), st("b", 2, 3)];
    assert_eq!(select_offensive_users(&stats, &cfg(ExpansionStrategy::TopN(50), 3)), ["b", "a"]);
}

#[test]
fn users_without_offence_never_selected() {
    let stats = [st("a", 0, 9), st("b", 1, 9)];
    assert_eq!(select_offensive_users(&stats, &cfg(ExpansionStrategy::TopN(10), 1)), ["b"]);
}

#[test]
fn exact_threshold_included() {
    // 1/2 and 3/6 sit exactly on θ = 0.5; 0.3·10 = 3 needs exact comparison
    let stats = [st("a", 1, 2), st("b", 3, 6), st("c", 3, 10), st("d", 2, 7)];
    assert_eq!(
        select_offensive_users(&stats, &cfg(ExpansionStrategy::FractionAtLeast(0.5), 1)),
        ["b", "a"]
    );
    assert_eq!(
        select_offensive_users(&stats, &cfg(ExpansionStrategy::FractionAtLeast(0.3), 1)),
        ["b", "a", "c"]
    );
}

fn stats_strategy() -> impl Strategy<Value = Vec<UserTargetStats>> {
    // small count ranges force many ties
    prop::collection::vec((1usize..12, 0usize..12), 0..200).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (n, k))| st(&format!("u{:03}", (i * 7919) % 1000), k.min(n), n))
            .collect()
    })
}

fn strategy_strategy() -> impl Strategy<Value = ExpansionStrategy> {
    prop_oneof![
        (1usize..=20).prop_map(|d| ExpansionStrategy::FractionAtLeast(d as f64 / 20.0)),
        prop::sample::select(vec![0.1, 0.3, 1.0 / 3.0, 0.7]).prop_map(ExpansionStrategy::FractionAtLeast),
        (1usize..60).prop_map(ExpansionStrategy::TopN),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_oracle(stats in stats_strategy(), strategy in strategy_strategy(), min_replies in 1usize..6) {
        let c = cfg(strategy, min_replies);
        prop_assert_eq!(select_offensive_users(&stats, &c), oracle(&stats, &c));
    }

    #[test]
    fn lowering_theta_keeps_users(stats in stats_strategy(), a in 1usize..=20, b in 1usize..=20, m in 1usize..6) {
        let (lo, hi) = (a.min(b) as f64 / 20.0, a.max(b) as f64 / 20.0);
        let strict: HashSet<String> = select_offensive_users(&stats, &cfg(ExpansionStrategy::FractionAtLeast(hi), m)).into_iter().collect();
        let loose: HashSet<String> = select_offensive_users(&stats, &cfg(ExpansionStrategy::FractionAtLeast(lo), m)).into_iter().collect();
        prop_assert!(strict.is_subset(&loose));
    }

    #[test]
    fn top_n_prefix(stats in stats_strategy(), n in 1usize..60, m in 1usize..6) {
        let a = select_offensive_users(&stats, &cfg(ExpansionStrategy::TopN(n), m));
        let b = select_offensive_users(&stats, &cfg(ExpansionStrategy::TopN(n + 1), m));
        prop_assert_eq!(&b[..a.len()], &a[..]);
    }
}

fn reply(id: usize, user: &str, text: &str) -> Tweet {
    Tweet {
        id: format!("r{id}"),
        author: user.into(),
        reply_to: Some("@t".into()),
        text: text.into(),
    }
}

#[test]
fn tagged_not_replies_of_selected_users_become_off() {
    let replies = [reply(1, "u", "نص مسيء"), reply(2, "u", "نص عادي"), reply(3, "v", "شيء اخر")];
    let out = expand(&replies, &["u".to_string()], "@t");
    assert_eq!(out.len(), 2);
    assert!(out.iter().all(|e| e.label == Label::Off && e.provenance == Provenance::Expansion));
    assert!(out.iter().all(|e| e.source_target.as_deref() == Some("@t")));
    assert!(expand(&replies, &[], "@t").is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn expand_emits_exactly_selected_replies(
        rows in prop::collection::vec((0usize..8, 0usize..30), 0..80),
        chosen in prop::collection::btree_set(0usize..8, 0..8),
    ) {
        let replies: Vec<Tweet> = rows
            .iter()
            .enumerate()
            .map(|(i, &(u, t))| reply(i, &format!("user{u}"), &format!("text number {t}")))
            .collect();
        let selected: Vec<String> = chosen.iter().map(|u| format!("user{u}")).collect();
        let out = expand(&replies, &selected, "@t");
        let expected: HashSet<String> = replies
            .iter()
            .filter(|r| selected.contains(&r.author))
            .map(|r| r.text.clone())
            .collect();
        let got: Vec<String> = out.iter().map(|e| e.text.clone()).collect();
        prop_assert_eq!(got.len(), expected.len());
        prop_assert_eq!(got.into_iter().collect::<HashSet<_>>(), expected);
    }
}

#[test]
fn stats_then_selection_through_tagging() {
    let replies: Vec<Tweet> = (0..10)
        .map(|i| reply(i, if i < 6 { "@Heavy" } else { "light" }, &format!("t{i}")))
        .collect();
    let tagged: Vec<(&Tweet, Prediction<f64>)> = replies
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let label = if i < 4 || i == 9 { Label::Off } else { Label::Not };
            (t, Prediction { label, score: 0.0 })
        })
        .collect();
    let stats = user_stats(&tagged, "@T").unwrap();
    assert_eq!((stats[0].user.as_str(), stats[0].n_replies, stats[0].n_offensive), ("heavy", 6, 4));
    assert_eq!((stats[1].user.as_str(), stats[1].n_replies, stats[1].n_offensive), ("light", 4, 1));
    let sel = select_offensive_users(&stats, &cfg(ExpansionStrategy::FractionAtLeast(0.5), 3));
    assert_eq!(sel, ["heavy"]);
    assert_eq!(expand(&replies, &sel, "@t").len(), 6);
}
