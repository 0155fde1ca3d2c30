//! Constituent-length re-linearization and short-firstness metrics.
//!
//! Every node's dependents are re-ordered by the token length of their
//! subtrees. In the non-head-final modes the head keeps its original rank
//! among its dependents (a head that preceded two of its three dependents
//! still precedes two of them); in head-final mode it goes last. Sorting is
//! stable, so equal-length dependents keep their surface order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::treebank::{DepTree, Dependents, Token};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    ShortFirst,
    LongFirst,
    RandomFirst,
    LongFirstHeadFinal,
}

impl FromStr for Order {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "short-first" => Ok(Order::ShortFirst),
            "long-first" => Ok(Order::LongFirst),
            "random-first" => Ok(Order::RandomFirst),
            "long-first-headfinal" => Ok(Order::LongFirstHeadFinal),
            other => Err(format!("unknown linearization mode `{other}`")),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Order::ShortFirst => "short-first",
            Order::LongFirst => "long-first",
            Order::RandomFirst => "random-first",
            Order::LongFirstHeadFinal => "long-first-headfinal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizationMode {
    pub order: Order,
    /// Only consulted by `RandomFirst`; mixed with a hash of the sentence id.
    pub rng_seed: u64,
}

impl LinearizationMode {
    pub fn new(order: Order) -> Self {
        LinearizationMode { order, rng_seed: 0 }
    }

    pub fn random(seed: u64) -> Self {
        LinearizationMode {
            order: Order::RandomFirst,
            rng_seed: seed,
        }
    }
}

/// What counts toward a constituent's length, and output casing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizeOptions {
    /// Count `PUNCT` tokens in constituent lengths.
    pub count_punct: bool,
    /// Lowercase output forms.
    pub lowercase: bool,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        LinearizeOptions {
            count_punct: true,
            lowercase: true,
        }
    }
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Constituent lengths per node (slot 0 unused).
fn weights(tree: &DepTree, deps: &Dependents, opts: &LinearizeOptions) -> Vec<usize> {
    let mut w = vec![0usize; tree.len() + 1];
    for node in deps.postorder(tree.root()) {
        let own = usize::from(opts.count_punct || tree.tokens()[node - 1].upos != "PUNCT");
        w[node] = own + deps.of(node).iter().map(|&c| w[c]).sum::<usize>();
    }
    w
}

/// A node's dependents plus itself, in output order.
enum Item {
    Head(usize),
    Child(usize),
}

fn arrange(
    node: usize,
    children: &[usize],
    weight: &[usize],
    ascending: bool,
    head_final: bool,
) -> Vec<Item> {
    let mut sorted = children.to_vec();
    if ascending {
        sorted.sort_by_key(|&c| weight[c]);
    } else {
        sorted.sort_by_key(|&c| std::cmp::Reverse(weight[c]));
    }
    let rank = if head_final {
        sorted.len()
    } else {
        children.iter().filter(|&&c| c < node).count()
    };
    let mut items: Vec<Item> = sorted.into_iter().map(Item::Child).collect();
    items.insert(rank, Item::Head(node));
    items
}

/// Per-node arrangement plan for one tree.
struct Plan {
    layout: Vec<Vec<Item>>,
    root: usize,
}

fn plan(tree: &DepTree, mode: LinearizationMode, opts: &LinearizeOptions) -> Plan {
    let deps = tree.dependents();
    let weight = weights(tree, &deps, opts);
    let mut rng = match mode.order {
        Order::RandomFirst => Some(ChaCha8Rng::seed_from_u64(
            mode.rng_seed ^ fnv1a(&tree.sentence_id),
        )),
        _ => None,
    };
    let mut layout: Vec<Vec<Item>> = (0..=tree.len()).map(|_| Vec::new()).collect();
    for node in deps.postorder(tree.root()) {
        let children = deps.of(node);
        let ascending = match mode.order {
            Order::ShortFirst => true,
            Order::LongFirst | Order::LongFirstHeadFinal => false,
            Order::RandomFirst => {
                children.len() < 2 || rng.as_mut().expect("seeded").random_bool(0.5)
            }
        };
        let head_final = mode.order == Order::LongFirstHeadFinal;
        layout[node] = arrange(node, children, &weight, ascending, head_final);
    }
    Plan {
        layout,
        root: tree.root(),
    }
}

impl Plan {
    fn emit_order(&self, node: usize, out: &mut Vec<usize>) {
        for item in &self.layout[node] {
            match *item {
                Item::Head(h) => out.push(h),
                Item::Child(c) => self.emit_order(c, out),
            }
        }
    }

    fn emit_brackets(&self, tree: &DepTree, node: usize, opts: &LinearizeOptions, out: &mut String) {
        for item in &self.layout[node] {
            if !out.is_empty() && !out.ends_with('[') {
                out.push(' ');
            }
            match *item {
                Item::Head(h) => out.push_str(&surface(&tree.tokens()[h - 1], opts)),
                Item::Child(c) => {
                    out.push('[');
                    self.emit_brackets(tree, c, opts, out);
                    out.push(']');
                }
            }
        }
    }
}

fn surface(t: &Token, opts: &LinearizeOptions) -> String {
    if opts.lowercase {
        t.form.to_lowercase()
    } else {
        t.form.clone()
    }
}

/// New surface order as original token indices.
pub fn relinearize_order(
    tree: &DepTree,
    mode: LinearizationMode,
    opts: &LinearizeOptions,
) -> Vec<usize> {
    let p = plan(tree, mode, opts);
    let mut out = Vec::with_capacity(tree.len());
    p.emit_order(p.root, &mut out);
    out
}

pub fn relinearize(tree: &DepTree, mode: LinearizationMode, opts: &LinearizeOptions) -> Vec<String> {
    relinearize_order(tree, mode, opts)
        .into_iter()
        .map(|i| surface(&tree.tokens()[i - 1], opts))
        .collect()
}

/// Fully bracketed rendering: every dependent constituent in `[...]`.
pub fn bracketed(tree: &DepTree, mode: LinearizationMode, opts: &LinearizeOptions) -> String {
    let p = plan(tree, mode, opts);
    let mut out = String::new();
    p.emit_brackets(tree, p.root, opts, &mut out);
    out
}

/// Rebuild the tree in a new surface order, carrying head links along.
/// `order[k]` is the original index of the token placed at position k+1.
pub fn permute(tree: &DepTree, order: &[usize]) -> DepTree {
    assert_eq!(order.len(), tree.len(), "order must be a permutation");
    let mut new_index = vec![0usize; tree.len() + 1];
    for (k, &old) in order.iter().enumerate() {
        new_index[old] = k + 1;
    }
    let tokens = order
        .iter()
        .enumerate()
        .map(|(k, &old)| {
            let t = &tree.tokens()[old - 1];
            Token {
                index: k + 1,
                head: new_index[t.head],
                ..t.clone()
            }
        })
        .collect();
    DepTree::new(tree.sentence_id.clone(), tokens, tree.metadata.clone())
        .expect("a permutation of a valid tree is valid")
}

/// Re-linearized tree (original forms, new positions).
pub fn relinearize_tree(tree: &DepTree, mode: LinearizationMode, opts: &LinearizeOptions) -> DepTree {
    permute(tree, &relinearize_order(tree, mode, opts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ShortFirst,
    LongFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub inversions: u64,
    pub max_inversions: u64,
    /// `inversions / max_inversions`, or 0 when nothing can be re-ordered.
    pub normalized: f64,
    /// Heads with at least two dependents.
    pub eligible_heads: usize,
}

/// Out-of-order dependent pairs summed over heads. Equal lengths are never
/// out of order.
pub fn inversion_score(tree: &DepTree, direction: Direction) -> InversionReport {
    inversion_score_with(tree, direction, &LinearizeOptions::default())
}

pub fn inversion_score_with(
    tree: &DepTree,
    direction: Direction,
    opts: &LinearizeOptions,
) -> InversionReport {
    let (mut inv, mut max, mut eligible) = (0u64, 0u64, 0usize);
    for h in head_inversions(tree, direction, opts) {
        inv += h.inversions;
        max += h.max_inversions;
        eligible += 1;
    }
    InversionReport {
        inversions: inv,
        max_inversions: max,
        normalized: if max > 0 { inv as f64 / max as f64 } else { 0.0 },
        eligible_heads: eligible,
    }
}

/// Inversions of one head's dependents, in linear order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeadInversions {
    pub head: usize,
    pub inversions: u64,
    pub max_inversions: u64,
}

/// Per-head counts for every head with at least two dependents, in head
/// index order. Equal lengths never count as inverted.
pub fn head_inversions(tree: &DepTree, direction: Direction, opts: &LinearizeOptions) -> Vec<HeadInversions> {
    let deps = tree.dependents();
    let w = weights(tree, &deps, opts);
    let mut out = Vec::new();
    for head in 1..=tree.len() {
        let ch = deps.of(head);
        let n = ch.len() as u64;
        if n < 2 {
            continue;
        }
        let mut inv = 0u64;
        for (i, &a) in ch.iter().enumerate() {
            for &b in &ch[i + 1..] {
                let out_of_order = match direction {
                    Direction::ShortFirst => w[a] > w[b],
                    Direction::LongFirst => w[a] < w[b],
                };
                inv += u64::from(out_of_order);
            }
        }
        out.push(HeadInversions {
            head,
            inversions: inv,
            max_inversions: n * (n - 1) / 2,
        });
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("order report needs at least one sentence")]
pub struct EmptyCorpus;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub sentences: usize,
    pub eligible_sentences: usize,
    pub fraction_short_first: f64,
    pub fraction_long_first: f64,
    pub fraction_short_first_excl_trivial: Option<f64>,
    pub fraction_long_first_excl_trivial: Option<f64>,
    pub mean_normalized_to_short: Option<f64>,
    pub mean_normalized_to_long: Option<f64>,
}

/// Streaming accumulator behind [`corpus_order_report`].
#[derive(Clone, Debug, Default)]
pub struct OrderAccumulator {
    sentences: usize,
    eligible: usize,
    short: usize,
    long: usize,
    short_eligible: usize,
    long_eligible: usize,
    sum_short: f64,
    sum_long: f64,
}

impl OrderAccumulator {
    pub fn push(&mut self, tree: &DepTree, opts: &LinearizeOptions) {
        let s = inversion_score_with(tree, Direction::ShortFirst, opts);
        let l = inversion_score_with(tree, Direction::LongFirst, opts);
        self.sentences += 1;
        let is_short = s.inversions == 0;
        let is_long = l.inversions == 0;
        self.short += usize::from(is_short);
        self.long += usize::from(is_long);
        if s.eligible_heads > 0 {
            self.eligible += 1;
            self.short_eligible += usize::from(is_short);
            self.long_eligible += usize::from(is_long);
            self.sum_short += s.normalized;
            self.sum_long += l.normalized;
        }
    }

    pub fn merge(&mut self, other: &OrderAccumulator) {
        self.sentences += other.sentences;
        self.eligible += other.eligible;
        self.short += other.short;
        self.long += other.long;
        self.short_eligible += other.short_eligible;
        self.long_eligible += other.long_eligible;
        self.sum_short += other.sum_short;
        self.sum_long += other.sum_long;
    }

    pub fn finish(&self) -> Result<OrderReport, EmptyCorpus> {
        if self.sentences == 0 {
            return Err(EmptyCorpus);
        }
        let n = self.sentences as f64;
        let e = self.eligible as f64;
        let over_eligible = |x: f64| (self.eligible > 0).then(|| x / e);
        Ok(OrderReport {
            sentences: self.sentences,
            eligible_sentences: self.eligible,
            fraction_short_first: self.short as f64 / n,
            fraction_long_first: self.long as f64 / n,
            fraction_short_first_excl_trivial: over_eligible(self.short_eligible as f64),
            fraction_long_first_excl_trivial: over_eligible(self.long_eligible as f64),
            mean_normalized_to_short: over_eligible(self.sum_short),
            mean_normalized_to_long: over_eligible(self.sum_long),
        })
    }
}

pub fn corpus_order_report<'a, I>(trees: I) -> Result<OrderReport, EmptyCorpus>
where
    I: IntoIterator<Item = &'a DepTree>,
{
    let opts = LinearizeOptions::default();
    let mut acc = OrderAccumulator::default();
    for t in trees {
        acc.push(t, &opts);
    }
    acc.finish()
}
