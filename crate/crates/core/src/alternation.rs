//! DO ↔ PO alternant construction on surface order.
//!
//! PO → DO deletes the preposition and moves the recipient right after the
//! verb. DO → PO moves the recipient after the theme and inserts the
//! preposition in front of it. Spans must be contiguous; anything else is a
//! parse artifact and is rejected.

use std::ops::Range;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, LogProbBackend};
use crate::detect::{DativeForm, DativeInstance};
use crate::lexicon::{VerbClass, VerbLexicon};
use crate::treebank::{DepTree, Span};

#[derive(Debug, Error)]
pub enum AlternationError {
    #[error("theme and recipient spans overlap")]
    OverlappingSpans,
    #[error("{0} span is not contiguous")]
    NonContiguous(&'static str),
    #[error("verb lies inside an argument span")]
    VerbInsideArgument,
    #[error("PO instance has no preposition token")]
    MissingPreposition,
    #[error("preposition does not directly precede the recipient")]
    DetachedPreposition,
    #[error("preposition has dependents outside the recipient")]
    StrayPrepositionDependent,
    #[error("operation expects a {expected} instance")]
    WrongForm { expected: DativeForm },
    #[error("span index {0} outside the sentence")]
    OutOfRange(usize),
    #[error("scoring failed for pair {pair_id}: {source}")]
    Scorer {
        pair_id: String,
        #[source]
        source: BackendError,
    },
}

/// A dative sentence with its argument positions (0-based, half-open).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Realization {
    pub tokens: Vec<String>,
    pub form: DativeForm,
    pub verb: usize,
    pub theme: Range<usize>,
    pub recipient: Range<usize>,
    pub preposition: Option<usize>,
}

fn range_of(span: &Span, role: &'static str, len: usize) -> Result<Range<usize>, AlternationError> {
    if span.last() > len {
        return Err(AlternationError::OutOfRange(span.last()));
    }
    if !span.is_contiguous() {
        return Err(AlternationError::NonContiguous(role));
    }
    Ok(span.first() - 1..span.last())
}

enum Slot {
    Old(usize),
    New(String),
}

impl Realization {
    pub fn from_instance(tree: &DepTree, inst: &DativeInstance) -> Result<Self, AlternationError> {
        let n = tree.len();
        if !inst.theme.is_disjoint(&inst.recipient) {
            return Err(AlternationError::OverlappingSpans);
        }
        let theme = range_of(&inst.theme, "theme", n)?;
        let recipient = range_of(&inst.recipient, "recipient", n)?;
        let verb = inst
            .verb_index
            .checked_sub(1)
            .filter(|&v| v < n)
            .ok_or(AlternationError::OutOfRange(inst.verb_index))?;
        if theme.contains(&verb) || recipient.contains(&verb) {
            return Err(AlternationError::VerbInsideArgument);
        }
        let preposition = match inst.form {
            DativeForm::Do => None,
            DativeForm::Po => {
                let p = inst
                    .preposition_index
                    .ok_or(AlternationError::MissingPreposition)?;
                if p + 1 != inst.recipient.first() {
                    return Err(AlternationError::DetachedPreposition);
                }
                let pp = tree
                    .subtree_span(p)
                    .map_err(|_| AlternationError::OutOfRange(p))?;
                if pp.len() != inst.recipient.len() + 1 || inst.theme.contains(p) {
                    return Err(AlternationError::StrayPrepositionDependent);
                }
                Some(p - 1)
            }
        };
        Ok(Realization {
            tokens: tree.forms(),
            form: inst.form,
            verb,
            theme,
            recipient,
            preposition,
        })
    }

    fn rebuild(&self, slots: Vec<Slot>, form: DativeForm) -> Realization {
        let mut tokens = Vec::with_capacity(slots.len());
        let mut new_pos = vec![usize::MAX; self.tokens.len()];
        let mut preposition = None;
        for (i, slot) in slots.into_iter().enumerate() {
            match slot {
                Slot::Old(p) => {
                    new_pos[p] = i;
                    tokens.push(self.tokens[p].clone());
                }
                Slot::New(t) => {
                    preposition = Some(i);
                    tokens.push(t);
                }
            }
        }
        let map = |r: &Range<usize>| new_pos[r.start]..new_pos[r.start] + r.len();
        Realization {
            tokens,
            form,
            verb: new_pos[self.verb],
            theme: map(&self.theme),
            recipient: map(&self.recipient),
            preposition,
        }
    }

    /// PO → DO.
    pub fn to_do(&self) -> Result<Realization, AlternationError> {
        let prep = match (self.form, self.preposition) {
            (DativeForm::Po, Some(p)) => p,
            _ => {
                return Err(AlternationError::WrongForm {
                    expected: DativeForm::Po,
                })
            }
        };
        let mut slots = Vec::with_capacity(self.tokens.len() - 1);
        for p in 0..self.tokens.len() {
            if p == prep || self.recipient.contains(&p) {
                continue;
            }
            slots.push(Slot::Old(p));
            if p == self.verb {
                slots.extend(self.recipient.clone().map(Slot::Old));
            }
        }
        Ok(self.rebuild(slots, DativeForm::Do))
    }

    /// DO → PO with the given preposition.
    pub fn to_po(&self, preposition: &str) -> Result<Realization, AlternationError> {
        if self.form != DativeForm::Do {
            return Err(AlternationError::WrongForm {
                expected: DativeForm::Do,
            });
        }
        let theme_last = self.theme.end - 1;
        let mut slots = Vec::with_capacity(self.tokens.len() + 1);
        for p in 0..self.tokens.len() {
            if self.recipient.contains(&p) {
                continue;
            }
            slots.push(Slot::Old(p));
            if p == theme_last {
                slots.push(Slot::New(preposition.to_string()));
                slots.extend(self.recipient.clone().map(Slot::Old));
            }
        }
        Ok(self.rebuild(slots, DativeForm::Po))
    }

    pub fn preposition_form(&self) -> Option<&str> {
        self.preposition.map(|p| self.tokens[p].as_str())
    }
}

pub fn po_to_do(tree: &DepTree, inst: &DativeInstance) -> Result<Vec<String>, AlternationError> {
    Ok(Realization::from_instance(tree, inst)?.to_do()?.tokens)
}

pub fn do_to_po(
    tree: &DepTree,
    inst: &DativeInstance,
    preposition: &str,
) -> Result<Vec<String>, AlternationError> {
    Ok(Realization::from_instance(tree, inst)?
        .to_po(preposition)?
        .tokens)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrepositionChoice {
    pub preposition: &'static str,
    /// No lexicon decision and no scorer: defaulted to "to".
    pub fallback: bool,
}

/// Lexicon first, scorer second. Verbs the lexicon leaves open (class
/// `both`, non-alternating, or absent) go to the scorer, which picks the
/// candidate with the higher total log-probability (ties go to "to").
pub fn choose_preposition(
    verb_lemma: &str,
    lexicon: &VerbLexicon,
    scorer: Option<&dyn LogProbBackend>,
    to_variant: &[String],
    for_variant: &[String],
    pair_id: &str,
) -> Result<PrepositionChoice, AlternationError> {
    let decided = |p| {
        Ok(PrepositionChoice {
            preposition: p,
            fallback: false,
        })
    };
    match lexicon.get(verb_lemma) {
        Some(e) if e.alternates && e.class == VerbClass::ToDative => return decided("to"),
        Some(e) if e.alternates && e.class == VerbClass::Benefactive => return decided("for"),
        _ => {}
    }
    let Some(scorer) = scorer else {
        return Ok(PrepositionChoice {
            preposition: "to",
            fallback: true,
        });
    };
    let scored = scorer
        .score_batch(&[to_variant.to_vec(), for_variant.to_vec()])
        .and_then(|s| {
            if s.len() == 2 {
                Ok(s)
            } else {
                Err(BackendError::Misaligned {
                    expected: 2,
                    got: s.len(),
                })
            }
        })
        .map_err(|source| AlternationError::Scorer {
            pair_id: pair_id.to_string(),
            source,
        })?;
    if scored[1].total_logprob > scored[0].total_logprob {
        decided("for")
    } else {
        decided("to")
    }
}

/// The evaluation unit: both realizations of one dative event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternationPair {
    pub pair_id: String,
    pub do_sentence: Vec<String>,
    pub po_sentence: Vec<String>,
    pub verb_lemma: String,
    pub attested: DativeForm,
    pub theme_len: usize,
    pub recipient_len: usize,
    #[serde(default)]
    pub recipient_animate: bool,
    #[serde(default)]
    pub theme_animate: bool,
    pub recipient_pronoun: bool,
    pub theme_pronoun: bool,
    pub preposition: String,
    #[serde(default)]
    pub prep_fallback: bool,
}

/// Animacy labels keyed by pair id, supplied from a sidecar file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnimacyLabel {
    pub pair_id: String,
    pub recipient_animate: bool,
    pub theme_animate: bool,
}

impl AlternationPair {
    pub fn apply(&mut self, label: &AnimacyLabel) {
        self.recipient_animate = label.recipient_animate;
        self.theme_animate = label.theme_animate;
    }
}

/// Produces alternants for attested datives.
#[derive(Clone, Copy)]
pub struct Alternator<'a> {
    pub lexicon: &'a VerbLexicon,
    pub scorer: Option<&'a dyn LogProbBackend>,
}

impl<'a> Alternator<'a> {
    pub fn new(lexicon: &'a VerbLexicon, scorer: Option<&'a dyn LogProbBackend>) -> Self {
        Alternator { lexicon, scorer }
    }

    /// Attested realization and its counterpart, plus the fallback flag.
    pub fn realize(
        &self,
        tree: &DepTree,
        inst: &DativeInstance,
    ) -> Result<(Realization, Realization, bool), AlternationError> {
        let attested = Realization::from_instance(tree, inst)?;
        match inst.form {
            DativeForm::Po => {
                let alt = attested.to_do()?;
                Ok((attested, alt, false))
            }
            DativeForm::Do => {
                let to = attested.to_po("to")?;
                let for_ = attested.to_po("for")?;
                let choice = choose_preposition(
                    &inst.verb_lemma,
                    self.lexicon,
                    self.scorer,
                    &to.tokens,
                    &for_.tokens,
                    &inst.pair_id(),
                )?;
                let alt = if choice.preposition == "for" { for_ } else { to };
                Ok((attested, alt, choice.fallback))
            }
        }
    }

    pub fn pair(
        &self,
        tree: &DepTree,
        inst: &DativeInstance,
    ) -> Result<AlternationPair, AlternationError> {
        let (attested, alt, fallback) = self.realize(tree, inst)?;
        let (do_r, po_r) = match inst.form {
            DativeForm::Do => (attested, alt),
            DativeForm::Po => (alt, attested),
        };
        let pronoun = |span: &Span| {
            tree.token(span.head_index)
                .is_some_and(|t| t.upos == "PRON")
        };
        Ok(AlternationPair {
            pair_id: inst.pair_id(),
            preposition: po_r.preposition_form().unwrap_or("to").to_string(),
            do_sentence: do_r.tokens,
            po_sentence: po_r.tokens,
            verb_lemma: inst.verb_lemma.clone(),
            attested: inst.form,
            theme_len: inst.theme.len(),
            recipient_len: inst.recipient.len(),
            recipient_animate: false,
            theme_animate: false,
            recipient_pronoun: pronoun(&inst.recipient),
            theme_pronoun: pronoun(&inst.theme),
            prep_fallback: fallback,
        })
    }
}

/// Up to `per_form` pairs of each attested form, sampled without
/// replacement; the survivors keep their input order.
pub fn sample_per_form(pairs: Vec<AlternationPair>, per_form: usize, seed: u64) -> Vec<AlternationPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; pairs.len()];
    for form in [DativeForm::Do, DativeForm::Po] {
        let idx: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].attested == form).collect();
        for k in index::sample(&mut rng, idx.len(), per_form.min(idx.len())) {
            keep[idx[k]] = true;
        }
    }
    pairs
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}
