//! Hand-built and synthetic parses for tests, fixtures and benchmarks.
//!
//! [`compact`] reads a one-line tree notation,
//! `form[/lemma] UPOS head deprel | ...`, so fixtures stay readable.
//! [`SentenceBuilder`] composes phrases with known structure and backs the
//! synthetic corpus generator.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::treebank::{DepTree, Token};

/// Parse the compact notation. Panics on malformed input; fixtures only.
pub fn compact(id: &str, spec: &str) -> DepTree {
    let tokens = spec
        .split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .enumerate()
        .map(|(i, part)| {
            let cols: Vec<&str> = part.split_whitespace().collect();
            assert_eq!(cols.len(), 4, "bad compact token `{part}`");
            let (form, lemma) = match cols[0].split_once('/') {
                Some((f, l)) if !f.is_empty() => (f.to_string(), l.to_string()),
                _ => (cols[0].to_string(), cols[0].to_lowercase()),
            };
            let head = cols[2].parse().expect("numeric head");
            Token::new(i + 1, form, lemma, cols[1], head, cols[3])
        })
        .collect();
    DepTree::new(id, tokens, BTreeMap::new()).expect("valid compact tree")
}

/// A noun phrase: optional determiner, adjectives, head noun, optional PP.
#[derive(Clone, Debug)]
pub struct Np {
    pub det: Option<&'static str>,
    pub adjs: Vec<&'static str>,
    pub noun: &'static str,
    pub upos: &'static str,
    pub pp: Option<(&'static str, Box<Np>)>,
}

impl Np {
    pub fn pron(word: &'static str) -> Self {
        Np {
            det: None,
            adjs: vec![],
            noun: word,
            upos: "PRON",
            pp: None,
        }
    }

    pub fn noun(det: &'static str, noun: &'static str) -> Self {
        Np {
            det: Some(det),
            adjs: vec![],
            noun,
            upos: "NOUN",
            pp: None,
        }
    }

    pub fn proper(name: &'static str) -> Self {
        Np {
            det: None,
            adjs: vec![],
            noun: name,
            upos: "PROPN",
            pp: None,
        }
    }

    pub fn adj(mut self, a: &'static str) -> Self {
        self.adjs.push(a);
        self
    }

    pub fn with_pp(mut self, prep: &'static str, obj: Np) -> Self {
        self.pp = Some((prep, Box::new(obj)));
        self
    }

    pub fn len(&self) -> usize {
        self.det.is_some() as usize
            + self.adjs.len()
            + 1
            + self.pp.as_ref().map_or(0, |(_, np)| 1 + np.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_pronoun(&self) -> bool {
        self.upos == "PRON"
    }
}

#[derive(Default)]
pub struct SentenceBuilder {
    rows: Vec<(String, String, String, usize, String)>,
}

impl SentenceBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a token; returns its 1-based index. Head is set by `attach`.
    pub fn word(&mut self, form: &str, lemma: &str, upos: &str) -> usize {
        self.rows.push((
            form.to_string(),
            lemma.to_string(),
            upos.to_string(),
            0,
            "ROOT".to_string(),
        ));
        self.rows.len()
    }

    pub fn attach(&mut self, dep: usize, head: usize, rel: &str) {
        let row = &mut self.rows[dep - 1];
        row.3 = head;
        row.4 = rel.to_string();
    }

    /// Append an NP; returns the index of its head noun.
    pub fn np(&mut self, np: &Np) -> usize {
        let det = np.det.map(|d| self.word(d, &d.to_lowercase(), "DET"));
        let adjs: Vec<usize> = np.adjs.iter().map(|a| self.word(a, a, "ADJ")).collect();
        let head = self.word(np.noun, &np.noun.to_lowercase(), np.upos);
        if let Some(d) = det {
            self.attach(d, head, "det");
        }
        for a in adjs {
            self.attach(a, head, "amod");
        }
        if let Some((prep, obj)) = &np.pp {
            self.pp(head, prep, obj, "prep");
        }
        head
    }

    /// Append a prepositional phrase attached to `head`; returns the
    /// preposition's index.
    pub fn pp(&mut self, head: usize, prep: &str, obj: &Np, rel: &str) -> usize {
        let p = self.word(prep, &prep.to_lowercase(), "ADP");
        self.attach(p, head, rel);
        let o = self.np(obj);
        self.attach(o, p, "pobj");
        p
    }

    pub fn build(self, id: &str) -> DepTree {
        let tokens = self
            .rows
            .into_iter()
            .enumerate()
            .map(|(i, (f, l, u, h, r))| Token::new(i + 1, f, l, u, h, r))
            .collect();
        DepTree::new(id, tokens, BTreeMap::new()).expect("builder produces valid trees")
    }
}

/// `subject verb recipient theme [adjunct]` with the recipient under `dative`.
pub fn do_sentence(
    id: &str,
    subject: &Np,
    verb: (&str, &str),
    recipient: &Np,
    theme: &Np,
    adjunct: Option<&str>,
) -> DepTree {
    let mut b = SentenceBuilder::new();
    let s = b.np(subject);
    let v = b.word(verb.0, verb.1, "VERB");
    b.attach(s, v, "nsubj");
    let r = b.np(recipient);
    b.attach(r, v, "dative");
    let t = b.np(theme);
    b.attach(t, v, "dobj");
    tail(&mut b, v, adjunct);
    b.build(id)
}

/// `subject verb theme prep recipient [adjunct]` with the prep under `dative`.
pub fn po_sentence(
    id: &str,
    subject: &Np,
    verb: (&str, &str),
    theme: &Np,
    prep: &str,
    recipient: &Np,
    adjunct: Option<&str>,
) -> DepTree {
    let mut b = SentenceBuilder::new();
    let s = b.np(subject);
    let v = b.word(verb.0, verb.1, "VERB");
    b.attach(s, v, "nsubj");
    let t = b.np(theme);
    b.attach(t, v, "dobj");
    b.pp(v, prep, recipient, "dative");
    tail(&mut b, v, adjunct);
    b.build(id)
}

fn tail(b: &mut SentenceBuilder, verb: usize, adjunct: Option<&str>) {
    if let Some(a) = adjunct {
        let x = b.word(a, &a.to_lowercase(), "ADV");
        b.attach(x, verb, "advmod");
    }
}

const VERBS_TO: &[(&str, &str)] = &[
    ("gave", "give"),
    ("sent", "send"),
    ("handed", "hand"),
    ("showed", "show"),
    ("told", "tell"),
    ("threw", "throw"),
    ("sold", "sell"),
    ("lent", "lend"),
    ("offered", "offer"),
    ("passed", "pass"),
];
const VERBS_FOR: &[(&str, &str)] = &[
    ("baked", "bake"),
    ("bought", "buy"),
    ("made", "make"),
    ("built", "build"),
    ("cooked", "cook"),
];
const NOUNS: &[&str] = &[
    "dog", "bone", "teacher", "book", "letter", "ball", "girl", "boy", "cake", "car", "friend",
    "apple", "song", "story", "box", "window", "house", "cat", "shop", "river",
];
const ADJS: &[&str] = &["green", "small", "old", "red", "happy", "big"];
const PRONS: &[&str] = &["me", "him", "her", "them", "us", "it"];
const SUBJECTS: &[&str] = &["I", "She", "He", "They", "We"];
const DETS: &[&str] = &["the", "a", "this", "my"];
const ADVERBS: &[&str] = &["yesterday", "again", "today", "quickly"];

fn random_np(rng: &mut impl Rng, depth: usize) -> Np {
    if rng.random_bool(0.25) {
        return Np::pron(PRONS.choose(rng).unwrap());
    }
    let mut np = Np::noun(DETS.choose(rng).unwrap(), NOUNS.choose(rng).unwrap());
    while np.adjs.len() < 2 && rng.random_bool(0.3) {
        let a = ADJS.choose(rng).unwrap();
        if !np.adjs.contains(a) {
            np = np.adj(a);
        }
    }
    if depth > 0 && rng.random_bool(0.2) {
        np = np.with_pp("from", random_np(rng, depth - 1));
    }
    np
}

fn random_subject(rng: &mut impl Rng) -> Np {
    Np::pron(SUBJECTS.choose(rng).unwrap())
}

/// Deterministic DO fixtures with a recipient immediately after the verb;
/// every one is a realizable dative.
pub fn do_fixtures(n: usize, seed: u64) -> Vec<DepTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let verb = if i % 4 == 3 {
                *VERBS_FOR.choose(&mut rng).unwrap()
            } else {
                *VERBS_TO.choose(&mut rng).unwrap()
            };
            let adjunct = rng.random_bool(0.3).then(|| *ADVERBS.choose(&mut rng).unwrap());
            do_sentence(
                &format!("do{i:04}"),
                &random_subject(&mut rng),
                verb,
                &random_np(&mut rng, 1),
                &random_np(&mut rng, 1),
                adjunct,
            )
        })
        .collect()
}

/// Deterministic PO fixtures using *to* for giving verbs and *for* for
/// creation verbs.
pub fn po_fixtures(n: usize, seed: u64) -> Vec<DepTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (verb, prep) = if i % 4 == 3 {
                (*VERBS_FOR.choose(&mut rng).unwrap(), "for")
            } else {
                (*VERBS_TO.choose(&mut rng).unwrap(), "to")
            };
            let adjunct = rng.random_bool(0.3).then(|| *ADVERBS.choose(&mut rng).unwrap());
            po_sentence(
                &format!("po{i:04}"),
                &random_subject(&mut rng),
                verb,
                &random_np(&mut rng, 1),
                prep,
                &random_np(&mut rng, 1),
                adjunct,
            )
        })
        .collect()
}

/// Kinds of sentence produced by [`synthetic_corpus`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    Do,
    Po,
    /// dobj plus a *for* phrase under `prep`
    Ambiguous,
    /// dobj plus an instrument PP
    TwoPostverbal,
    Transitive,
    Intransitive,
}

/// Mixture weights, in percent, for the synthetic corpus.
pub const SYNTH_MIX: [(SynthKind, u32); 6] = [
    (SynthKind::Do, 3),
    (SynthKind::Po, 3),
    (SynthKind::Ambiguous, 2),
    (SynthKind::TwoPostverbal, 12),
    (SynthKind::Transitive, 50),
    (SynthKind::Intransitive, 30),
];

pub fn synthetic_sentence(id: &str, kind: SynthKind, rng: &mut impl Rng) -> DepTree {
    let subject = random_subject(rng);
    match kind {
        SynthKind::Do => do_sentence(
            id,
            &subject,
            *VERBS_TO.choose(rng).unwrap(),
            &random_np(rng, 1),
            &random_np(rng, 2),
            None,
        ),
        SynthKind::Po => po_sentence(
            id,
            &subject,
            *VERBS_TO.choose(rng).unwrap(),
            &random_np(rng, 2),
            "to",
            &random_np(rng, 1),
            None,
        ),
        SynthKind::Ambiguous | SynthKind::TwoPostverbal | SynthKind::Transitive => {
            let mut b = SentenceBuilder::new();
            let s = b.np(&subject);
            let v = b.word("saw", "see", "VERB");
            b.attach(s, v, "nsubj");
            let o = b.np(&random_np(rng, 2));
            b.attach(o, v, "dobj");
            match kind {
                SynthKind::Ambiguous => {
                    b.pp(v, "for", &random_np(rng, 0), "prep");
                }
                SynthKind::TwoPostverbal => {
                    b.pp(v, "with", &random_np(rng, 1), "prep");
                }
                _ => {}
            }
            b.build(id)
        }
        SynthKind::Intransitive => {
            let mut b = SentenceBuilder::new();
            let np = random_np(rng, 1);
            let s = b.np(if np.is_pronoun() { &subject } else { &np });
            let v = b.word("ran", "run", "VERB");
            b.attach(s, v, "nsubj");
            let adjunct = rng.random_bool(0.5).then(|| *ADVERBS.choose(rng).unwrap());
            tail(&mut b, v, adjunct);
            b.build(id)
        }
    }
}

/// Lazily generated synthetic treebank with the [`SYNTH_MIX`] proportions.
pub fn synthetic_corpus(n: usize, seed: u64) -> impl Iterator<Item = (SynthKind, DepTree)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: u32 = SYNTH_MIX.iter().map(|(_, w)| w).sum();
    (0..n).map(move |i| {
        let mut pick = rng.random_range(0..total);
        let mut kind = SYNTH_MIX[0].0;
        for (k, w) in SYNTH_MIX {
            if pick < w {
                kind = k;
                break;
            }
            pick -= w;
        }
        let tree = synthetic_sentence(&format!("syn{i:07}"), kind, &mut rng);
        (kind, tree)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_reads_lemma() {
        let t = compact("x", "I PRON 2 nsubj | gave/give VERB 0 ROOT");
        assert_eq!(t.tokens()[1].lemma, "give");
        assert_eq!(t.tokens()[0].lemma, "i");
    }

    #[test]
    fn builder_np_structure() {
        let np = Np::noun("the", "melon")
            .adj("green")
            .with_pp("from", Np::noun("the", "shop"));
        assert_eq!(np.len(), 6);
        let mut b = SentenceBuilder::new();
        let h = b.np(&np);
        let t = b.build("np");
        assert_eq!(h, 3);
        assert_eq!(t.text(), "the green melon from the shop");
        assert_eq!(t.subtree_span(h).unwrap().len(), 6);
    }

    #[test]
    fn corpus_is_deterministic() {
        let a: Vec<_> = synthetic_corpus(50, 7).map(|(_, t)| t).collect();
        let b: Vec<_> = synthetic_corpus(50, 7).map(|(_, t)| t).collect();
        assert_eq!(a, b);
    }
}
