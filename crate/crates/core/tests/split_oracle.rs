//! Challenge-set construction against an independent sequential re-router.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use common::synthetic;
use subchar_core::testset::{audit_split, build_unseen_split, HoldoutConfig, SplitResult};
use subchar_core::vocab::build_char_vocab;

fn cjk(c: char) -> bool {
    let u = c as u32;
    (0x4E00..=0x9FFF).contains(&u)
        || (0x3400..=0x4DBF).contains(&u)
        || (0x20000..=0x2B81F).contains(&u) && !(0x2A6E0..=0x2A6FF).contains(&u)
        || (0xF900..=0xFAFF).contains(&u)
        || (0x2F800..=0x2FA1F).contains(&u)
}

fn oracle(bitext: &[(String, String)], decomposable: impl Fn(char) -> bool, max_count: usize) -> SplitResult {
    let mut freq: HashMap<char, usize> = HashMap::new();
    for (s, _) in bitext {
        for c in s.chars().filter(|c| cjk(*c)) {
            *freq.entry(c).or_default() += 1;
        }
    }
    let trigger_counts: BTreeMap<char, usize> = freq
        .into_iter()
        .filter(|&(c, n)| n <= max_count && decomposable(c))
        .collect();
    let mut out = SplitResult {
        trigger_chars: trigger_counts.keys().copied().collect(),
        trigger_counts,
        ..Default::default()
    };
    for (s, t) in bitext {
        if !s.chars().any(|c| out.trigger_chars.contains(&c)) {
            out.train.push((s.clone(), t.clone()));
            continue;
        }
        let a = s.split_whitespace().count() as f64;
        let b = t.split_whitespace().count() as f64;
        if a > 0.0 && b > 0.0 && a.max(b) / a.min(b) < 3.5 {
            out.unseen_test.push((s.clone(), t.clone()));
        } else {
            out.rejected_by_ratio += 1;
        }
    }
    out
}

#[test]
fn matches_sequential_oracle() {
    for seed in 0..10 {
        let syn = synthetic::generate(seed, 1000);
        for max_count in [2, 3] {
            let split = build_unseen_split(&syn.bitext, &syn.db, &HoldoutConfig::frequency(max_count)).unwrap();
            let expected = oracle(&syn.bitext, |c| syn.db.is_decomposable(c), max_count);
            assert_eq!(split, expected, "seed {seed} max_count {max_count}");

            let planted: BTreeSet<char> = syn
                .planted
                .iter()
                .filter(|(_, &k)| k <= max_count)
                .map(|(&c, _)| c)
                .collect();
            assert_eq!(split.trigger_chars, planted);
            assert!(syn.undecomposable.iter().all(|c| !split.trigger_chars.contains(c)));

            // Partition: every input pair lands in exactly one bucket.
            assert_eq!(
                split.train.len() + split.unseen_test.len() + split.rejected_by_ratio,
                syn.bitext.len()
            );
            let train_chars = build_char_vocab(split.train.iter().map(|p| &p.0));
            assert!(split.trigger_chars.iter().all(|c| !train_chars.contains_char(*c)));
            audit_split(&split, &syn.db).unwrap();
        }
    }
}

#[test]
fn raising_max_count_never_shrinks_triggers() {
    let syn = synthetic::generate(42, 1000);
    let mut prev = BTreeSet::new();
    for max_count in 1..=6 {
        let split = build_unseen_split(&syn.bitext, &syn.db, &HoldoutConfig::frequency(max_count)).unwrap();
        assert!(prev.is_subset(&split.trigger_chars));
        prev = split.trigger_chars;
    }
}

#[test]
fn independent_of_thread_count() {
    let syn = synthetic::generate(5, 1000);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| build_unseen_split(&syn.bitext, &syn.db, &HoldoutConfig::frequency(3)).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(2));
    assert_eq!(one, run(8));
}

#[test]
fn held_out_chars_are_unseen_by_a_train_vocab() {
    let syn = synthetic::generate(9, 1000);
    let split = build_unseen_split(&syn.bitext, &syn.db, &HoldoutConfig::frequency(2)).unwrap();
    let vocab = build_char_vocab(split.train.iter().map(|p| &p.0));
    for c in &split.trigger_chars {
        assert!(subchar_core::is_unseen(&vocab, *c));
    }
}
