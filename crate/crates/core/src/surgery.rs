//! Training-condition corpus builds and counterfactual pollution.
//!
//! [`CorpusSurgeon`] takes the corpus in chunks. Non-dative sentences are
//! classified in parallel and emitted straight to the sink in input order.
//! Dative sentences are buffered, since controlled sampling needs the whole
//! pool. [`CorpusSurgeon::finish`] then emits the kept datives (and their
//! alternants) in input order, followed by injected counterfactuals in
//! sampling order.
//!
//! | condition        | datives kept           | pollution |
//! |------------------|------------------------|-----------|
//! | `default`        | attested               | optional  |
//! | `balanced`       | attested + alternant   | yes       |
//! | `swapped`        | alternant only         | never     |
//! | `no-datives`     | none                   | yes       |
//! | `no-2postverbal` | none, 2-postverbal cut | yes       |
//!
//! Ambiguous sentences are dropped in every condition.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alternation::{AlternationError, Alternator, Realization};
use crate::detect::{DativeForm, DativeInstance, Detector, SentenceClass};
use crate::treebank::{write_tree, DepTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Default,
    Balanced,
    Swapped,
    NoDatives,
    #[serde(rename = "no-2postverbal")]
    No2Postverbal,
}

impl Condition {
    pub fn keeps_datives(self) -> bool {
        matches!(self, Condition::Default | Condition::Balanced | Condition::Swapped)
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "default" => Ok(Condition::Default),
            "balanced" => Ok(Condition::Balanced),
            "swapped" | "swapped-datives" => Ok(Condition::Swapped),
            "no-datives" => Ok(Condition::NoDatives),
            "no-2postverbal" => Ok(Condition::No2Postverbal),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Default => "default",
            Condition::Balanced => "balanced",
            Condition::Swapped => "swapped",
            Condition::NoDatives => "no-datives",
            Condition::No2Postverbal => "no-2postverbal",
        })
    }
}

/// Counterfactual insertions offsetting datives the detector missed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PollutionPlan {
    pub estimated_false_negatives: u64,
    /// DO counterfactuals, built from attested POs.
    pub insert_do: u64,
    /// PO counterfactuals, built from attested DOs.
    pub insert_po: u64,
    pub error_rate: f64,
    /// Share of the estimate assigned to the DO form.
    pub do_share: f64,
}

impl PollutionPlan {
    /// DO:PO ratio of the insertions; `None` when no PO is inserted.
    pub fn do_po_ratio(&self) -> Option<f64> {
        (self.insert_po > 0).then(|| self.insert_do as f64 / self.insert_po as f64)
    }
}

fn round_half_up(x: f64) -> u64 {
    // non-negative inputs only, where `round` is half-up
    x.max(0.0).round() as u64
}

/// `estimate = round(count * error_rate)`, `insert_do = round(estimate *
/// do_share)`, `insert_po = estimate - insert_do`, rounding half up.
pub fn plan_pollution(non_dative_sentence_count: u64, error_rate: f64, do_share: f64) -> PollutionPlan {
    let estimate = round_half_up(non_dative_sentence_count as f64 * error_rate);
    let insert_do = round_half_up(estimate as f64 * do_share).min(estimate);
    PollutionPlan {
        estimated_false_negatives: estimate,
        insert_do,
        insert_po: estimate - insert_do,
        error_rate,
        do_share,
    }
}

/// Where the pollution plan comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollutionSpec {
    None,
    Plan(PollutionPlan),
    /// Derived from the scanned non-dative count.
    ErrorRate { error_rate: f64, do_share: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgeryConfig {
    pub condition: Condition,
    /// Attested sentences kept per form; `None` keeps as many as the
    /// scarcer form allows.
    pub count_per_form: Option<usize>,
    pub pollution: PollutionSpec,
    /// Insert counterfactuals (ignored for `swapped`).
    pub inject: bool,
    pub rng_seed: u64,
}

impl SurgeryConfig {
    pub fn new(condition: Condition) -> Self {
        SurgeryConfig {
            condition,
            count_per_form: None,
            pollution: PollutionSpec::None,
            inject: false,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SurgeryError {
    #[error(
        "requested {requested} attested datives per form, but only {available_do} DO and {available_po} PO sentences are available"
    )]
    CountExceedsAvailable {
        requested: usize,
        available_do: usize,
        available_po: usize,
    },
    #[error("pollution needs {needed} attested {source_form} instances, pool has {available}")]
    InsufficientPool {
        source_form: DativeForm,
        needed: u64,
        available: usize,
    },
    #[error("alternant for {sentence_id}: {source}")]
    Alternation {
        sentence_id: String,
        #[source]
        source: AlternationError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitKind {
    /// Untouched non-dative sentence.
    Original,
    /// Kept attested dative.
    Attested,
    /// Generated alternant of a kept dative.
    Alternant,
    /// Injected counterfactual.
    Counterfactual,
}

/// A sentence leaving the surgery.
pub enum Emitted<'a> {
    Tree {
        kind: EmitKind,
        tree: &'a DepTree,
    },
    Generated {
        kind: EmitKind,
        id: String,
        form: DativeForm,
        tokens: Vec<String>,
    },
}

impl Emitted<'_> {
    pub fn kind(&self) -> EmitKind {
        match self {
            Emitted::Tree { kind, .. } | Emitted::Generated { kind, .. } => *kind,
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Emitted::Tree { tree, .. } => &tree.sentence_id,
            Emitted::Generated { id, .. } => id,
        }
    }

    pub fn text(&self) -> String {
        match self {
            Emitted::Tree { tree, .. } => tree.text(),
            Emitted::Generated { tokens, .. } => tokens.join(" "),
        }
    }
}

pub trait SentenceSink {
    fn emit(&mut self, sentence: Emitted<'_>) -> io::Result<()>;
}

/// Collects output lines in memory.
#[derive(Debug, Default)]
pub struct LineSink {
    pub lines: Vec<String>,
}

impl SentenceSink for LineSink {
    fn emit(&mut self, sentence: Emitted<'_>) -> io::Result<()> {
        self.lines.push(sentence.text());
        Ok(())
    }
}

/// Writes one sentence per line, and optionally the untouched trees as
/// CoNLL-U.
pub struct TextSink<W: Write, C: Write> {
    pub text: W,
    pub conllu: Option<C>,
}

impl<W: Write, C: Write> SentenceSink for TextSink<W, C> {
    fn emit(&mut self, sentence: Emitted<'_>) -> io::Result<()> {
        writeln!(self.text, "{}", sentence.text())?;
        if let (Some(out), Emitted::Tree { tree, .. }) = (self.conllu.as_mut(), &sentence) {
            write_tree(out, tree)?;
        }
        Ok(())
    }
}

/// Drops everything; counts only.
#[derive(Debug, Default)]
pub struct CountingSink {
    pub count: usize,
}

impl SentenceSink for CountingSink {
    fn emit(&mut self, _: Emitted<'_>) -> io::Result<()> {
        self.count += 1;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormCounts {
    #[serde(rename = "DO")]
    pub do_: u64,
    #[serde(rename = "PO")]
    pub po: u64,
}

impl FormCounts {
    fn add(&mut self, form: DativeForm, n: u64) {
        match form {
            DativeForm::Do => self.do_ += n,
            DativeForm::Po => self.po += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.do_ + self.po
    }
}

impl std::ops::Add for FormCounts {
    type Output = FormCounts;

    fn add(self, o: FormCounts) -> FormCounts {
        FormCounts {
            do_: self.do_ + o.do_,
            po: self.po + o.po,
        }
    }
}

/// Dative exposure by source, per form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exposure {
    pub controlled: FormCounts,
    pub false_negatives_estimate: FormCounts,
    pub counterfactuals: FormCounts,
    pub total: FormCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurgeryReport {
    pub condition: Condition,
    pub rng_seed: u64,
    pub input_sentences: u64,
    pub dative_sentences: u64,
    pub dative_instances: u64,
    /// Dative sentences with an instance that cannot be realized.
    pub rejected_sentences: u64,
    pub ambiguous_sentences: u64,
    pub non_dative_sentences: u64,
    pub two_postverbal_sentences: u64,
    /// Realizable dative sentences containing each form.
    pub available: FormCounts,
    pub attested_kept: FormCounts,
    pub alternants: FormCounts,
    pub prep_fallbacks: u64,
    pub pollution_plan: Option<PollutionPlan>,
    pub exposure: Exposure,
    pub output_sentences: u64,
    /// Dative exposure total as a percentage of output sentences.
    pub exposure_percent: f64,
}

struct Buffered {
    tree: DepTree,
    instances: Vec<DativeInstance>,
    has: [bool; 2],
}

fn slot(form: DativeForm) -> usize {
    match form {
        DativeForm::Do => 0,
        DativeForm::Po => 1,
    }
}

#[derive(Default)]
struct Tally {
    input: u64,
    dative: u64,
    instances: u64,
    rejected: u64,
    ambiguous: u64,
    non_dative: u64,
    two_postverbal: u64,
    output: u64,
}

/// Incremental condition builder. Feed with [`scan`](Self::scan), close
/// with [`finish`](Self::finish).
pub struct CorpusSurgeon<'a> {
    config: SurgeryConfig,
    detector: &'a Detector,
    alternator: Alternator<'a>,
    buffer: Vec<Buffered>,
    tally: Tally,
}

enum Scanned {
    Dative(Vec<DativeInstance>, bool),
    Ambiguous,
    NonDative(bool),
}

impl<'a> CorpusSurgeon<'a> {
    pub fn new(config: SurgeryConfig, detector: &'a Detector, alternator: Alternator<'a>) -> Self {
        CorpusSurgeon {
            config,
            detector,
            alternator,
            buffer: Vec::new(),
            tally: Tally::default(),
        }
    }

    pub fn scan<S: SentenceSink>(&mut self, chunk: Vec<DepTree>, sink: &mut S) -> Result<(), SurgeryError> {
        let detector = self.detector;
        let classes: Vec<Scanned> = chunk
            .par_iter()
            .map(|t| match detector.classify(t) {
                SentenceClass::Dative(inst) => {
                    let ok = inst.iter().all(|i| Realization::from_instance(t, i).is_ok());
                    Scanned::Dative(inst, ok)
                }
                SentenceClass::Ambiguous => Scanned::Ambiguous,
                SentenceClass::NonDative { two_postverbal } => Scanned::NonDative(two_postverbal),
            })
            .collect();
        let cut_2pv = self.config.condition == Condition::No2Postverbal;
        for (tree, class) in chunk.into_iter().zip(classes) {
            self.tally.input += 1;
            match class {
                Scanned::Dative(instances, realizable) => {
                    self.tally.dative += 1;
                    self.tally.instances += instances.len() as u64;
                    if !realizable {
                        self.tally.rejected += 1;
                        continue;
                    }
                    let mut has = [false; 2];
                    for i in &instances {
                        has[slot(i.form)] = true;
                    }
                    self.buffer.push(Buffered { tree, instances, has });
                }
                Scanned::Ambiguous => self.tally.ambiguous += 1,
                Scanned::NonDative(two_pv) => {
                    self.tally.non_dative += 1;
                    self.tally.two_postverbal += u64::from(two_pv);
                    if !(cut_2pv && two_pv) {
                        sink.emit(Emitted::Tree {
                            kind: EmitKind::Original,
                            tree: &tree,
                        })?;
                        self.tally.output += 1;
                    }
                }
            }
        }
        Ok(())
    }

    fn available(&self) -> FormCounts {
        let mut c = FormCounts::default();
        for b in &self.buffer {
            c.do_ += u64::from(b.has[0]);
            c.po += u64::from(b.has[1]);
        }
        c
    }

    /// Greedy fill over a seeded shuffle: a sentence is taken only if every
    /// form it contains still has room.
    fn sample_controlled(&self, rng: &mut ChaCha8Rng) -> Result<Vec<bool>, SurgeryError> {
        let avail = self.available();
        let target = self
            .config
            .count_per_form
            .unwrap_or(avail.do_.min(avail.po) as usize);
        let err = || SurgeryError::CountExceedsAvailable {
            requested: target,
            available_do: avail.do_ as usize,
            available_po: avail.po as usize,
        };
        if target as u64 > avail.do_ || target as u64 > avail.po {
            return Err(err());
        }
        let mut order: Vec<usize> = (0..self.buffer.len()).collect();
        order.shuffle(rng);
        let mut kept = vec![false; self.buffer.len()];
        let mut filled = [0usize; 2];
        for i in order {
            if filled == [target, target] {
                break;
            }
            let has = self.buffer[i].has;
            let fits = (0..2).all(|f| !has[f] || filled[f] < target);
            if fits {
                kept[i] = true;
                for f in 0..2 {
                    filled[f] += usize::from(has[f]);
                }
            }
        }
        if filled != [target, target] {
            return Err(err());
        }
        Ok(kept)
    }

    pub fn finish<S: SentenceSink>(self, sink: &mut S) -> Result<SurgeryReport, SurgeryError> {
        let config = &self.config;
        let alternator = &self.alternator;
        let condition = config.condition;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let kept = if condition.keeps_datives() {
            self.sample_controlled(&mut rng)?
        } else {
            vec![false; self.buffer.len()]
        };

        let mut attested_kept = FormCounts::default();
        let mut alternants = FormCounts::default();
        let mut fallbacks = 0u64;
        let mut output = self.tally.output;
        for (b, _) in self.buffer.iter().zip(&kept).filter(|(_, &k)| k) {
            if condition != Condition::Swapped {
                sink.emit(Emitted::Tree {
                    kind: EmitKind::Attested,
                    tree: &b.tree,
                })?;
                output += 1;
                attested_kept.do_ += u64::from(b.has[0]);
                attested_kept.po += u64::from(b.has[1]);
            }
            if condition == Condition::Default {
                continue;
            }
            for inst in &b.instances {
                let (_, alt, fallback) =
                    alternator
                        .realize(&b.tree, inst)
                        .map_err(|source| SurgeryError::Alternation {
                            sentence_id: b.tree.sentence_id.clone(),
                            source,
                        })?;
                fallbacks += u64::from(fallback);
                alternants.add(alt.form, 1);
                sink.emit(Emitted::Generated {
                    kind: EmitKind::Alternant,
                    id: format!("{}#alt{}", b.tree.sentence_id, inst.verb_index),
                    form: alt.form,
                    tokens: alt.tokens,
                })?;
                output += 1;
            }
        }

        let plan = match config.pollution {
            PollutionSpec::None => None,
            PollutionSpec::Plan(p) => Some(p),
            PollutionSpec::ErrorRate {
                error_rate,
                do_share,
            } => Some(plan_pollution(self.tally.non_dative, error_rate, do_share)),
        };
        let mut counterfactuals = FormCounts::default();
        if let Some(plan) = plan.filter(|_| config.inject && condition != Condition::Swapped) {
            let pool: Vec<(&DepTree, &DativeInstance)> = self
                .buffer
                .iter()
                .zip(&kept)
                .filter(|(_, &k)| !k)
                .flat_map(|(b, _)| b.instances.iter().map(move |i| (&b.tree, i)))
                .collect();
            let injected = inject_pollution(&pool, &plan, alternator, config.rng_seed)?;
            for cf in injected {
                fallbacks += u64::from(cf.prep_fallback);
                counterfactuals.add(cf.form, 1);
                sink.emit(Emitted::Generated {
                    kind: EmitKind::Counterfactual,
                    id: cf.id,
                    form: cf.form,
                    tokens: cf.tokens,
                })?;
                output += 1;
            }
        }

        let controlled = match condition {
            Condition::Default => attested_kept,
            Condition::Balanced => attested_kept + alternants,
            Condition::Swapped => alternants,
            Condition::NoDatives | Condition::No2Postverbal => FormCounts::default(),
        };
        let false_negatives_estimate = plan
            .map(|p| FormCounts {
                do_: p.insert_do,
                po: p.insert_po,
            })
            .unwrap_or_default();
        let total = controlled + false_negatives_estimate + counterfactuals;
        let t = &self.tally;
        Ok(SurgeryReport {
            condition,
            rng_seed: config.rng_seed,
            input_sentences: t.input,
            dative_sentences: t.dative,
            dative_instances: t.instances,
            rejected_sentences: t.rejected,
            ambiguous_sentences: t.ambiguous,
            non_dative_sentences: t.non_dative,
            two_postverbal_sentences: t.two_postverbal,
            available: self.available(),
            attested_kept,
            alternants,
            prep_fallbacks: fallbacks,
            pollution_plan: plan,
            exposure: Exposure {
                controlled,
                false_negatives_estimate,
                counterfactuals,
                total,
            },
            output_sentences: output,
            exposure_percent: if output > 0 {
                100.0 * total.total() as f64 / output as f64
            } else {
                0.0
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterfactual {
    pub id: String,
    pub source_sentence: String,
    pub form: DativeForm,
    pub tokens: Vec<String>,
    pub prep_fallback: bool,
}

/// Samples `insert_do` attested POs and `insert_po` attested DOs without
/// replacement and flips each. DO counterfactuals come first, each group in
/// sampling order. The sampling stream is independent of the controlled
/// sampling stream for the same seed.
pub fn inject_pollution(
    pool: &[(&DepTree, &DativeInstance)],
    plan: &PollutionPlan,
    alternator: &Alternator<'_>,
    rng_seed: u64,
) -> Result<Vec<Counterfactual>, SurgeryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(1);
    let mut out = Vec::with_capacity((plan.insert_do + plan.insert_po) as usize);
    for (source_form, needed) in [(DativeForm::Po, plan.insert_do), (DativeForm::Do, plan.insert_po)] {
        let candidates: Vec<&(&DepTree, &DativeInstance)> =
            pool.iter().filter(|(_, i)| i.form == source_form).collect();
        if (candidates.len() as u64) < needed {
            return Err(SurgeryError::InsufficientPool {
                source_form,
                needed,
                available: candidates.len(),
            });
        }
        for k in index::sample(&mut rng, candidates.len(), needed as usize) {
            let (tree, inst) = candidates[k];
            let (_, alt, fallback) =
                alternator
                    .realize(tree, inst)
                    .map_err(|source| SurgeryError::Alternation {
                        sentence_id: tree.sentence_id.clone(),
                        source,
                    })?;
            out.push(Counterfactual {
                id: format!("{}#cf{}", tree.sentence_id, inst.verb_index),
                source_sentence: tree.sentence_id.clone(),
                form: alt.form,
                tokens: alt.tokens,
                prep_fallback: fallback,
            });
        }
    }
    Ok(out)
}

/// In-memory convenience over [`CorpusSurgeon`].
pub fn build_condition<I>(
    trees: I,
    config: SurgeryConfig,
    detector: &Detector,
    alternator: Alternator<'_>,
) -> Result<(Vec<String>, SurgeryReport), SurgeryError>
where
    I: IntoIterator<Item = DepTree>,
{
    let mut surgeon = CorpusSurgeon::new(config, detector, alternator);
    let mut sink = LineSink::default();
    surgeon.scan(trees.into_iter().collect(), &mut sink)?;
    let report = surgeon.finish(&mut sink)?;
    Ok((sink.lines, report))
}
