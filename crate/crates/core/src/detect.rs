//! Dative detection over dependency parses.
//!
//! Loose detection matches label patterns:
//!
//! * DO: a verb with a `dative` dependent and a `dobj`, or with two `dobj`s.
//! * PO: a verb with a `dobj` (theme) plus a *to* phrase under `dative` or
//!   `prep`, or a *for* phrase under `dative`, whose `pobj` is the recipient.
//!
//! Argument heads must be nominal and the arguments must follow the verb.
//! Strict detection keeps the loose instances whose verb is in the lexicon
//! and whose form is licensed by the verb's class.
//!
//! Label names are configuration; the defaults follow the spaCy English
//! label inventory.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lexicon::VerbLexicon;
use crate::treebank::{DepTree, Dependents, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DativeForm {
    #[serde(rename = "DO")]
    Do,
    #[serde(rename = "PO")]
    Po,
}

impl DativeForm {
    pub fn other(self) -> Self {
        match self {
            DativeForm::Do => DativeForm::Po,
            DativeForm::Po => DativeForm::Do,
        }
    }
}

impl fmt::Display for DativeForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DativeForm::Do => "DO",
            DativeForm::Po => "PO",
        })
    }
}

impl FromStr for DativeForm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "DO" | "do" => Ok(DativeForm::Do),
            "PO" | "po" => Ok(DativeForm::Po),
            other => Err(format!("unknown dative form `{other}`")),
        }
    }
}

/// A preposition that can mark a PO recipient, and the relations it may
/// attach to the verb under.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerRule {
    pub preposition: String,
    pub relations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    pub direct_object: Vec<String>,
    pub dative: Vec<String>,
    pub preposition: Vec<String>,
    pub prepositional_object: Vec<String>,
    pub clausal_complement: Vec<String>,
    pub markers: Vec<MarkerRule>,
    pub require_postverbal: bool,
    pub verb_upos: Vec<String>,
    pub argument_upos: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            direct_object: strings(&["dobj"]),
            dative: strings(&["dative"]),
            preposition: strings(&["prep"]),
            prepositional_object: strings(&["pobj"]),
            clausal_complement: strings(&["ccomp"]),
            markers: vec![
                MarkerRule {
                    preposition: "to".into(),
                    relations: strings(&["dative", "prep"]),
                },
                MarkerRule {
                    preposition: "for".into(),
                    relations: strings(&["dative"]),
                },
            ],
            require_postverbal: true,
            verb_upos: strings(&["VERB"]),
            argument_upos: strings(&["NOUN", "PROPN", "PRON", "DET"]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("detection config field `{0}` must name at least one label")]
pub struct ConfigError(pub &'static str);

impl DetectionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields: [(&'static str, &Vec<String>); 5] = [
            ("direct_object", &self.direct_object),
            ("dative", &self.dative),
            ("preposition", &self.preposition),
            ("prepositional_object", &self.prepositional_object),
            ("verb_upos", &self.verb_upos),
        ];
        for (name, labels) in fields {
            if labels.is_empty() || labels.iter().any(|l| l.is_empty()) {
                return Err(ConfigError(name));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DativeInstance {
    pub sentence_id: String,
    pub verb_index: usize,
    pub verb_lemma: String,
    pub form: DativeForm,
    pub theme: Span,
    pub recipient: Span,
    /// Lowercased preposition for PO instances.
    pub preposition: Option<String>,
    pub preposition_index: Option<usize>,
    pub strict: bool,
}

impl DativeInstance {
    /// Stable identifier for pairs derived from this instance.
    pub fn pair_id(&self) -> String {
        format!("{}:{}", self.sentence_id, self.verb_index)
    }
}

/// Where a sentence lands in the three-way corpus partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SentenceClass {
    Dative(Vec<DativeInstance>),
    Ambiguous,
    NonDative { two_postverbal: bool },
}

/// Detection rules bound to a label configuration and optional lexicon.
#[derive(Clone, Debug)]
pub struct Detector {
    config: DetectionConfig,
    lexicon: Option<VerbLexicon>,
}

struct View<'a> {
    tree: &'a DepTree,
    deps: Dependents,
}

impl<'a> View<'a> {
    fn new(tree: &'a DepTree) -> Self {
        View {
            tree,
            deps: tree.dependents(),
        }
    }

    fn tok(&self, i: usize) -> &'a crate::treebank::Token {
        &self.tree.tokens()[i - 1]
    }
}

fn has(labels: &[String], value: &str) -> bool {
    labels.iter().any(|l| l == value)
}

impl Detector {
    pub fn new(config: DetectionConfig, lexicon: Option<VerbLexicon>) -> Self {
        Detector { config, lexicon }
    }

    pub fn config(&self) -> &DetectionConfig {
        &self.config
    }

    pub fn lexicon(&self) -> Option<&VerbLexicon> {
        self.lexicon.as_ref()
    }

    fn is_verb(&self, v: &View, i: usize) -> bool {
        has(&self.config.verb_upos, &v.tok(i).upos)
    }

    fn is_argument(&self, v: &View, i: usize) -> bool {
        has(&self.config.argument_upos, &v.tok(i).upos)
    }

    fn pobj_of(&self, v: &View, prep: usize) -> Option<usize> {
        v.deps
            .of(prep)
            .iter()
            .copied()
            .find(|&c| has(&self.config.prepositional_object, &v.tok(c).deprel))
    }

    fn postverbal(&self, verb: usize, span: &Span) -> bool {
        !self.config.require_postverbal || span.first() > verb
    }

    /// Loose instances, at most one per verb. Strictness is filled in when a
    /// lexicon is attached.
    pub fn detect_loose(&self, tree: &DepTree) -> Vec<DativeInstance> {
        let v = View::new(tree);
        let mut out = Vec::new();
        for verb in 1..=tree.len() {
            if !self.is_verb(&v, verb) {
                continue;
            }
            if let Some(mut inst) = self.match_verb(&v, verb) {
                inst.strict = self
                    .lexicon
                    .as_ref()
                    .is_some_and(|lex| refine_strict(&inst, lex));
                out.push(inst);
            }
        }
        out
    }

    fn match_verb(&self, v: &View, verb: usize) -> Option<DativeInstance> {
        let cfg = &self.config;
        let children = v.deps.of(verb);
        let span = |n: usize| v.tree.subtree_span_with(&v.deps, n);
        let argument = |n: usize| self.is_argument(v, n) && self.postverbal(verb, &span(n));

        let objects: Vec<usize> = children
            .iter()
            .copied()
            .filter(|&c| has(&cfg.direct_object, &v.tok(c).deprel) && argument(c))
            .collect();
        if objects.is_empty() {
            return None;
        }
        let make = |form, theme: usize, recipient: Span, prep: Option<usize>| DativeInstance {
            sentence_id: v.tree.sentence_id.clone(),
            verb_index: verb,
            verb_lemma: v.tok(verb).lemma.to_lowercase(),
            form,
            theme: span(theme),
            recipient,
            preposition: prep.map(|p| v.tok(p).form.to_lowercase()),
            preposition_index: prep,
            strict: false,
        };

        // DO: nominal dative dependent plus a direct object
        let dative = children
            .iter()
            .copied()
            .find(|&c| has(&cfg.dative, &v.tok(c).deprel) && argument(c));
        if let Some(recipient) = dative {
            return Some(make(DativeForm::Do, objects[0], span(recipient), None));
        }
        // DO: two direct objects, the first is the recipient
        if objects.len() >= 2 {
            return Some(make(DativeForm::Do, objects[1], span(objects[0]), None));
        }
        // PO: theme plus a marked prepositional recipient
        for &c in children {
            let tok = v.tok(c);
            let prep = tok.form.to_lowercase();
            let licensed = cfg
                .markers
                .iter()
                .any(|m| m.preposition == prep && has(&m.relations, &tok.deprel));
            if !licensed {
                continue;
            }
            let Some(pobj) = self.pobj_of(v, c) else {
                continue;
            };
            if !argument(pobj) || (cfg.require_postverbal && c < verb) {
                continue;
            }
            return Some(make(DativeForm::Po, objects[0], span(pobj), Some(c)));
        }
        None
    }

    /// Some verb has two direct objects, or a direct object plus any
    /// nominal dative dependent or prepositional phrase with an object.
    pub fn detect_2postverbal(&self, tree: &DepTree) -> bool {
        let v = View::new(tree);
        self.two_postverbal(&v)
    }

    fn two_postverbal(&self, v: &View) -> bool {
        let cfg = &self.config;
        (1..=v.tree.len()).any(|verb| {
            if !self.is_verb(v, verb) {
                return false;
            }
            let children = v.deps.of(verb);
            let objects = children
                .iter()
                .filter(|&&c| has(&cfg.direct_object, &v.tok(c).deprel))
                .count();
            if objects == 0 {
                return false;
            }
            objects >= 2
                || children.iter().any(|&c| {
                    let rel = &v.tok(c).deprel;
                    has(&cfg.dative, rel)
                        || (has(&cfg.preposition, rel) && self.pobj_of(v, c).is_some())
                })
        })
    }

    /// Dative-free patterns that hide undetected datives: a direct object
    /// with a clausal complement, or a direct object with a *for* phrase
    /// under a plain preposition relation.
    fn ambiguous(&self, v: &View) -> bool {
        let cfg = &self.config;
        (1..=v.tree.len()).any(|verb| {
            if !self.is_verb(v, verb) {
                return false;
            }
            let children = v.deps.of(verb);
            let has_object = children
                .iter()
                .any(|&c| has(&cfg.direct_object, &v.tok(c).deprel));
            has_object
                && children.iter().any(|&c| {
                    let tok = v.tok(c);
                    has(&cfg.clausal_complement, &tok.deprel)
                        || (has(&cfg.preposition, &tok.deprel)
                            && tok.form.eq_ignore_ascii_case("for")
                            && self.pobj_of(v, c).is_some())
                })
        })
    }

    pub fn classify(&self, tree: &DepTree) -> SentenceClass {
        let instances = self.detect_loose(tree);
        if !instances.is_empty() {
            return SentenceClass::Dative(instances);
        }
        let v = View::new(tree);
        if self.ambiguous(&v) {
            SentenceClass::Ambiguous
        } else {
            SentenceClass::NonDative {
                two_postverbal: self.two_postverbal(&v),
            }
        }
    }

    /// Three-way partition of a corpus; per-sentence work runs in parallel.
    pub fn partition_corpus(&self, trees: &[DepTree]) -> Partition {
        let classes: Vec<SentenceClass> = trees.par_iter().map(|t| self.classify(t)).collect();
        let mut p = Partition::default();
        for (tree, class) in trees.iter().zip(classes) {
            let id = tree.sentence_id.clone();
            match class {
                SentenceClass::Dative(inst) => {
                    p.datives.insert(id);
                    p.instances.extend(inst);
                }
                SentenceClass::Ambiguous => {
                    p.ambiguous.insert(id);
                }
                SentenceClass::NonDative { two_postverbal } => {
                    if two_postverbal {
                        p.two_postverbal.insert(id.clone());
                    }
                    p.non_datives.insert(id);
                }
            }
        }
        p
    }
}

impl Default for Detector {
    fn default() -> Self {
        Detector::new(DetectionConfig::default(), None)
    }
}

/// True iff the verb is in the lexicon and licenses the instance's form and
/// preposition.
pub fn refine_strict(instance: &DativeInstance, lexicon: &VerbLexicon) -> bool {
    let Some(entry) = lexicon.get(&instance.verb_lemma) else {
        return false;
    };
    if !entry.allows(instance.form) {
        return false;
    }
    match (&instance.form, &instance.preposition) {
        (DativeForm::Po, Some(p)) => entry.class.licenses(p),
        (DativeForm::Po, None) => false,
        (DativeForm::Do, _) => true,
    }
}

/// Sentence id sets plus the loose instances found in the dative set.
/// `two_postverbal` is the subset of `non_datives` that the
/// no-2postverbal condition removes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Partition {
    pub datives: BTreeSet<String>,
    pub ambiguous: BTreeSet<String>,
    pub non_datives: BTreeSet<String>,
    pub two_postverbal: BTreeSet<String>,
    pub instances: Vec<DativeInstance>,
}
