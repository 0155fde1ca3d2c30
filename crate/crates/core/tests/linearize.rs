mod common;

use std::collections::BTreeMap;

use dative_core::linearize::{
    bracketed, corpus_order_report, inversion_score, relinearize, relinearize_order, relinearize_tree, Direction,
    LinearizationMode, LinearizeOptions, Order,
};
use dative_core::synth::synthetic_corpus;
use dative_core::treebank::DepTree;
use proptest::prelude::*;

const ORDERS: [Order; 4] = [Order::ShortFirst, Order::LongFirst, Order::RandomFirst, Order::LongFirstHeadFinal];

fn keep_case() -> LinearizeOptions {
    LinearizeOptions {
        lowercase: false,
        ..LinearizeOptions::default()
    }
}

#[test]
fn fork_sentence_brackets() {
    let tree = common::fixture("fork-eat");
    let opts = LinearizeOptions::default();
    assert_eq!(
        bracketed(&tree, LinearizationMode::new(Order::ShortFirst), &opts),
        "[he] uses [[a] fork] [[to] eat [[the] [green] melon [from [[the] shop]]]]"
    );
    assert_eq!(
        bracketed(&tree, LinearizationMode::new(Order::LongFirstHeadFinal), &opts),
        "[[[[[the] shop] from] [the] [green] melon] [to] eat] [[a] fork] [he] uses"
    );
    let cased = relinearize(&tree, LinearizationMode::new(Order::LongFirstHeadFinal), &keep_case());
    assert_eq!(cased.last().map(String::as_str), Some("uses"));
    assert!(cased.contains(&"He".to_string()));
}

#[test]
fn random_first_flips_are_balanced() {
    // a head with two dependents of different lengths; count how often the
    // shorter one comes first across seeds
    let tree = dative_core::synth::compact("r", "a X 2 dep | h X 0 root | b X 4 dep | c X 2 dep");
    let opts = LinearizeOptions::default();
    let mut short_first = 0;
    let n = 4000;
    for seed in 0..n {
        let out = relinearize(&tree, LinearizationMode::random(seed), &opts);
        if out[0] == "a" {
            short_first += 1;
        }
    }
    let frac = short_first as f64 / n as f64;
    assert!((0.45..0.55).contains(&frac), "{frac}");
}

#[test]
fn random_first_depends_on_sentence_id() {
    let trees: Vec<DepTree> = synthetic_corpus(300, 5).map(|(_, t)| t).collect();
    let opts = LinearizeOptions::default();
    let mode = LinearizationMode::random(11);
    let a: Vec<Vec<String>> = trees.iter().map(|t| relinearize(t, mode, &opts)).collect();
    let b: Vec<Vec<String>> = trees.iter().rev().map(|t| relinearize(t, mode, &opts)).collect();
    let b: Vec<Vec<String>> = b.into_iter().rev().collect();
    assert_eq!(a, b);
    let other: Vec<Vec<String>> = trees
        .iter()
        .map(|t| relinearize(t, LinearizationMode::random(12), &opts))
        .collect();
    assert_ne!(a, other);
}

#[test]
fn corpus_report_on_linearized_corpora() {
    let trees: Vec<DepTree> = synthetic_corpus(500, 8).map(|(_, t)| t).collect();
    let opts = LinearizeOptions::default();
    let short: Vec<DepTree> = trees
        .iter()
        .map(|t| relinearize_tree(t, LinearizationMode::new(Order::ShortFirst), &opts))
        .collect();
    let r = corpus_order_report(&short).unwrap();
    assert_eq!(r.mean_normalized_to_short, Some(0.0));
    assert!(r.fraction_short_first >= r.fraction_long_first);
    assert_eq!(corpus_order_report(&trees).unwrap().sentences, 500);
}

fn multiset(v: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for s in v {
        *m.entry(s.as_str()).or_insert(0) += 1;
    }
    m
}

proptest! {
    #[test]
    fn permutation_preserves_tokens(tree in common::arb_tree(15), seed in any::<u64>()) {
        let opts = keep_case();
        for order in ORDERS {
            let mode = LinearizationMode { order, rng_seed: seed };
            let mut perm = relinearize_order(&tree, mode, &opts);
            let out = relinearize(&tree, mode, &opts);
            let forms = tree.forms();
            prop_assert_eq!(multiset(&out), multiset(&forms));
            perm.sort_unstable();
            prop_assert_eq!(perm, (1..=tree.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn deterministic_orders_are_idempotent(tree in common::arb_tree(15)) {
        let opts = keep_case();
        for order in [Order::ShortFirst, Order::LongFirst, Order::LongFirstHeadFinal] {
            let mode = LinearizationMode::new(order);
            let once = relinearize_tree(&tree, mode, &opts);
            let twice = relinearize_tree(&once, mode, &opts);
            prop_assert_eq!(once.forms(), twice.forms());
        }
    }

    #[test]
    fn headfinal_puts_heads_last(tree in common::arb_tree(15)) {
        let out = relinearize_tree(&tree, LinearizationMode::new(Order::LongFirstHeadFinal), &keep_case());
        for t in out.tokens() {
            if t.head != 0 {
                prop_assert!(t.index < t.head);
            }
        }
        prop_assert_eq!(inversion_score(&out, Direction::LongFirst).inversions, 0);
    }

    #[test]
    fn structure_survives_permutation(tree in common::arb_tree(15)) {
        let out = relinearize_tree(&tree, LinearizationMode::new(Order::LongFirst), &keep_case());
        let deps = tree.dependents();
        let mut a = tree.subtree_sizes(&deps);
        let d2 = out.dependents();
        let mut b = out.subtree_sizes(&d2);
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
        // every permuted constituent is contiguous
        for node in 1..=out.len() {
            prop_assert!(out.subtree_span_with(&d2, node).is_contiguous());
        }
    }
}
