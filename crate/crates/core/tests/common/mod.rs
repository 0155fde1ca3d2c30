#![allow(dead_code)]

use std::collections::BTreeMap;

use dative_core::treebank::{parse_treebank, DepTree, Token};
use proptest::prelude::*;

pub fn fixtures() -> Vec<DepTree> {
    let parsed = parse_treebank(include_bytes!("../data/fixtures.conllu"));
    assert!(parsed.errors.is_empty(), "{:?}", parsed.errors);
    parsed.trees
}

pub fn fixture(id: &str) -> DepTree {
    fixtures().into_iter().find(|t| t.sentence_id == id).unwrap()
}

/// Tree from a random surface permutation and random attachment choices.
pub fn tree_from(id: &str, forms: &[String], order: &[u32], attach: &[u32]) -> DepTree {
    let n = forms.len();
    let mut positions: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        positions.swap(i, order[i] as usize % (i + 1));
    }
    let mut head = vec![0usize; n + 1];
    for k in 1..n {
        head[positions[k]] = positions[attach[k] as usize % k];
    }
    let tokens = (1..=n)
        .map(|i| Token::new(i, forms[i - 1].clone(), forms[i - 1].to_lowercase(), "X", head[i], "dep"))
        .collect();
    DepTree::new(id, tokens, BTreeMap::new()).unwrap()
}

pub fn arb_tree(max: usize) -> impl Strategy<Value = DepTree> {
    (1..=max)
        .prop_flat_map(|n| {
            (
                prop::collection::vec("[A-Za-z]{1,6}", n),
                prop::collection::vec(any::<u32>(), n),
                prop::collection::vec(any::<u32>(), n),
            )
        })
        .prop_map(|(forms, order, attach)| tree_from("t", &forms, &order, &attach))
}
