mod common;

use std::collections::BTreeSet;
use std::io::BufReader;

use dative_core::synth::synthetic_corpus;
use dative_core::treebank::{emit_treebank, parse_treebank, DepTree, ParseErrorKind, TreeError, TreebankReader};
use proptest::prelude::*;

/// Nodes whose head chain passes through `node`.
fn reachable(tree: &DepTree, node: usize) -> BTreeSet<usize> {
    (1..=tree.len())
        .filter(|&i| {
            let mut cur = i;
            loop {
                if cur == node {
                    return true;
                }
                cur = tree.tokens()[cur - 1].head;
                if cur == 0 {
                    return false;
                }
            }
        })
        .collect()
}

#[test]
fn melon_subtree_matches_reachability() {
    let tree = common::fixture("melon-fork");
    let span = tree.subtree_span(5).unwrap();
    let oracle: Vec<usize> = reachable(&tree, 5).into_iter().collect();
    assert_eq!(span.token_indices, oracle);
    assert_eq!(span.len(), 6);
    let words: Vec<&str> = span
        .token_indices
        .iter()
        .map(|&i| tree.tokens()[i - 1].form.as_str())
        .collect();
    assert_eq!(words.join(" "), "the green melon from the shop");
    assert!(span.is_contiguous());
    assert_eq!(tree.subtree_span(0), Err(TreeError::InvalidIndex(0)));
    assert_eq!(tree.subtree_span(12), Err(TreeError::InvalidIndex(12)));
}

#[test]
fn thousand_blocks_thousand_trees() {
    let trees: Vec<DepTree> = synthetic_corpus(1000, 3).map(|(_, t)| t).collect();
    let bytes = emit_treebank(&trees);
    let read: Vec<DepTree> = TreebankReader::new(BufReader::new(&bytes[..]))
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(read.len(), 1000);
    assert_eq!(read, trees);
}

#[test]
fn bad_sentences_are_isolated() {
    let mut text = String::from_utf8(emit_treebank(&common::fixtures()[..3])).unwrap();
    text.push_str("# sent_id = broken\n1\tx\tx\tX\t_\t_\t2\tdep\t_\t_\n2\ty\ty\tX\t_\t_\t1\tdep\t_\t_\n\n");
    text.push_str("# sent_id = short\n1\tonly\tthree\n\n");
    text.push_str(&String::from_utf8(emit_treebank(&common::fixtures()[3..5])).unwrap());
    let parsed = parse_treebank(text.as_bytes());
    assert_eq!(parsed.trees.len(), 5);
    assert_eq!(parsed.errors.len(), 2);
    assert_eq!(parsed.errors[0].sentence_id.as_deref(), Some("broken"));
    assert!(matches!(parsed.errors[0].kind, ParseErrorKind::Tree(_)));
    assert!(matches!(parsed.errors[1].kind, ParseErrorKind::ColumnCount(3)));
}

#[test]
fn metadata_survives() {
    let text = "# sent_id = a1\n# text = He ran\n# genre = child\n1\tHe\the\tPRON\t_\t_\t2\tnsubj\t_\t_\n2\tran\trun\tVERB\t_\t_\t0\tROOT\t_\t_\n";
    let parsed = parse_treebank(text.as_bytes());
    let t = &parsed.trees[0];
    assert_eq!(t.sentence_id, "a1");
    assert_eq!(t.metadata.get("genre").map(String::as_str), Some("child"));
    let again = parse_treebank(&emit_treebank(&parsed.trees));
    assert_eq!(again.trees, parsed.trees);
}

proptest! {
    #[test]
    fn emit_parse_round_trip(tree in common::arb_tree(15)) {
        let parsed = parse_treebank(&emit_treebank(std::slice::from_ref(&tree)));
        prop_assert!(parsed.errors.is_empty());
        prop_assert_eq!(&parsed.trees[0], &tree);
    }

    #[test]
    fn spans_nest_and_siblings_are_disjoint(tree in common::arb_tree(15)) {
        let deps = tree.dependents();
        for node in 1..=tree.len() {
            let span = tree.subtree_span_with(&deps, node);
            prop_assert_eq!(span.token_indices.iter().copied().collect::<BTreeSet<_>>(), reachable(&tree, node));
            let kids = deps.of(node);
            for (i, &a) in kids.iter().enumerate() {
                let sa = tree.subtree_span_with(&deps, a);
                prop_assert!(sa.token_indices.iter().all(|&x| span.contains(x)));
                prop_assert!(sa.len() < span.len());
                for &b in &kids[i + 1..] {
                    prop_assert!(sa.is_disjoint(&tree.subtree_span_with(&deps, b)));
                }
            }
        }
    }
}
