use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use clap::Args;
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use dative_core::alternation::{sample_per_form, AlternationPair, Alternator};
use dative_core::backend::{FileBackend, HttpBackend, HttpOptions, LogBase, LogProbBackend, UniformBackend};
use dative_core::detect::{DetectionConfig, Detector};
use dative_core::eval::evaluate_pairs;
use dative_core::lexicon::VerbLexicon;
use dative_core::linearize::{
    bracketed, relinearize, relinearize_tree, LinearizationMode, LinearizeOptions, OrderAccumulator, Order,
};
use dative_core::report::{emit_report, read_animacy, read_judgments, read_records};
use dative_core::surgery::{Condition, CorpusSurgeon, PollutionSpec, SurgeryConfig, SurgeryError, TextSink};
use dative_core::synth::{do_fixtures, po_fixtures, synthetic_corpus};
use dative_core::treebank::{write_tree, DepTree, TreebankReader};

use crate::config::{config_error, require_input, RunConfig};
use crate::manifest::Run;
use crate::{Io, Outcome};

const CHUNK: usize = 8192;

fn outcome(complete: bool) -> Outcome {
    if complete {
        Outcome::Complete
    } else {
        Outcome::Partial
    }
}

fn out_dir(io: &Io, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    io.out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| config_error("no --out-dir given"))
}

fn input(io: &Io, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    require_input(io.input.clone(), cfg.input.as_ref(), "input treebank")
}

/// Streams the treebank in chunks; returns the number of rejected sentences.
fn read_chunks(path: &Path, mut f: impl FnMut(Vec<DepTree>) -> anyhow::Result<()>) -> anyhow::Result<u64> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut buf = Vec::with_capacity(CHUNK);
    let mut errors = 0;
    for item in TreebankReader::new(BufReader::new(file)) {
        match item {
            Ok(tree) => {
                buf.push(tree);
                if buf.len() == CHUNK {
                    f(std::mem::take(&mut buf))?;
                }
            }
            Err(e) => {
                warn!("{}: {e}", path.display());
                errors += 1;
            }
        }
    }
    if !buf.is_empty() {
        f(buf)?;
    }
    Ok(errors)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut json = serde_json::to_vec_pretty(value)?;
    json.push(b'\n');
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))
}

#[derive(Args)]
pub struct Lexicon {
    /// Verb lexicon TSV (default: built-in list).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

fn lexicon_inputs(flag: &Lexicon, cfg: &RunConfig) -> Option<PathBuf> {
    flag.lexicon.clone().or_else(|| cfg.lexicon.clone())
}

#[derive(Serialize)]
struct DetectionRun<'a> {
    detection: &'a DetectionConfig,
    lexicon: Option<String>,
}

fn detector(lex: &Lexicon, cfg: &RunConfig) -> anyhow::Result<(Detector, VerbLexicon, DetectionConfig)> {
    let detection = cfg.detection()?;
    let lexicon = cfg.lexicon(lex.lexicon.as_deref())?;
    Ok((
        Detector::new(detection.clone(), Some(lexicon.clone())),
        lexicon,
        detection,
    ))
}

fn session<C: Serialize>(
    command: &'static str,
    run_config: &C,
    out: &Path,
    inputs: impl IntoIterator<Item = PathBuf>,
) -> anyhow::Result<Run> {
    let mut run = Run::new(command, run_config, out)?;
    run.inputs.extend(inputs);
    Ok(run)
}

#[derive(Args)]
pub struct DetectArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    lexicon: Lexicon,
    /// Keep only lexicon-licensed instances.
    #[arg(long)]
    strict_only: bool,
}

pub fn detect(a: DetectArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let path = input(&a.io, cfg)?;
    let out = out_dir(&a.io, cfg)?;
    let (det, _, detection) = detector(&a.lexicon, cfg)?;
    #[derive(Serialize)]
    struct C<'a> {
        #[serde(flatten)]
        base: DetectionRun<'a>,
        strict_only: bool,
    }
    let lex_path = lexicon_inputs(&a.lexicon, cfg);
    let conf = C {
        base: DetectionRun {
            detection: &detection,
            lexicon: lex_path.as_ref().map(|p| p.display().to_string()),
        },
        strict_only: a.strict_only,
    };
    let mut run = session("detect", &conf, &out, std::iter::once(path.clone()).chain(lex_path))?;
    let mut w = create(&run.output("instances.jsonl"))?;
    let mut n = 0usize;
    let errors = read_chunks(&path, |chunk| {
        let found: Vec<_> = chunk.par_iter().map(|t| det.detect_loose(t)).collect();
        for inst in found.into_iter().flatten() {
            if a.strict_only && !inst.strict {
                continue;
            }
            serde_json::to_writer(&mut w, &inst)?;
            w.write_all(b"\n")?;
            n += 1;
        }
        Ok(())
    })?;
    w.flush()?;
    info!("{n} instances, {errors} rejected sentences");
    run.write(errors == 0)?;
    Ok(outcome(errors == 0))
}

#[derive(Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    lexicon: Lexicon,
}

#[derive(Serialize)]
struct PartitionSummary {
    sentences: usize,
    rejected_sentences: u64,
    datives: usize,
    ambiguous: usize,
    non_datives: usize,
    two_postverbal: usize,
    instances: usize,
    instances_do: usize,
    instances_po: usize,
    strict_instances: usize,
}

fn write_ids(path: &Path, ids: &BTreeSet<String>) -> anyhow::Result<()> {
    let mut w = create(path)?;
    for id in ids {
        writeln!(w, "{id}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn partition(a: PartitionArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let path = input(&a.io, cfg)?;
    let out = out_dir(&a.io, cfg)?;
    let (det, _, detection) = detector(&a.lexicon, cfg)?;
    let lex_path = lexicon_inputs(&a.lexicon, cfg);
    let conf = DetectionRun {
        detection: &detection,
        lexicon: lex_path.as_ref().map(|p| p.display().to_string()),
    };
    let mut run = session("partition", &conf, &out, std::iter::once(path.clone()).chain(lex_path))?;
    let mut inst_w = create(&run.output("instances.jsonl"))?;
    let (mut datives, mut ambiguous, mut non_datives, mut two_pv) =
        (BTreeSet::new(), BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    let (mut sentences, mut n_do, mut n_po, mut n_strict, mut n_inst) = (0, 0, 0, 0, 0);
    let errors = read_chunks(&path, |chunk| {
        sentences += chunk.len();
        let p = det.partition_corpus(&chunk);
        for inst in &p.instances {
            n_inst += 1;
            match inst.form {
                dative_core::detect::DativeForm::Do => n_do += 1,
                dative_core::detect::DativeForm::Po => n_po += 1,
            }
            n_strict += usize::from(inst.strict);
            serde_json::to_writer(&mut inst_w, inst)?;
            inst_w.write_all(b"\n")?;
        }
        datives.extend(p.datives);
        ambiguous.extend(p.ambiguous);
        non_datives.extend(p.non_datives);
        two_pv.extend(p.two_postverbal);
        Ok(())
    })?;
    inst_w.flush()?;
    write_ids(&run.output("datives.txt"), &datives)?;
    write_ids(&run.output("ambiguous.txt"), &ambiguous)?;
    write_ids(&run.output("non_datives.txt"), &non_datives)?;
    write_ids(&run.output("two_postverbal.txt"), &two_pv)?;
    let summary = PartitionSummary {
        sentences,
        rejected_sentences: errors,
        datives: datives.len(),
        ambiguous: ambiguous.len(),
        non_datives: non_datives.len(),
        two_postverbal: two_pv.len(),
        instances: n_inst,
        instances_do: n_do,
        instances_po: n_po,
        strict_instances: n_strict,
    };
    write_json(&run.output("partition.json"), &summary)?;
    run.write(errors == 0)?;
    Ok(outcome(errors == 0))
}

#[derive(Args, Clone, Serialize)]
pub struct BackendArgs {
    /// `file:PATH`, `http://HOST:PORT` (or `http:URL`), or `uniform:LOGPROB`.
    #[arg(long)]
    backend: Option<String>,
    /// Per-request timeout in seconds (default 60).
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Retries after a transient failure (default 2).
    #[arg(long)]
    retries: Option<u32>,
    /// Concurrent scoring requests (default 1).
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Base of backend log-probabilities: e, 2 or 10.
    #[arg(long)]
    log_base: Option<String>,
}

#[derive(Serialize)]
struct BackendSpec {
    backend: Option<String>,
    timeout_secs: u64,
    retries: u32,
    max_in_flight: usize,
    log_base: String,
}

impl BackendArgs {
    fn resolve(&self, cfg: &RunConfig) -> BackendSpec {
        let s = &cfg.score;
        BackendSpec {
            backend: self.backend.clone().or_else(|| s.backend.clone()),
            timeout_secs: self.timeout_secs.or(s.timeout_secs).unwrap_or(60),
            retries: self.retries.or(s.retries).unwrap_or(2),
            max_in_flight: self.max_in_flight.or(s.max_in_flight).unwrap_or(1),
            log_base: self
                .log_base
                .clone()
                .or_else(|| s.log_base.clone())
                .unwrap_or_else(|| "e".into()),
        }
    }
}

impl BackendSpec {
    fn file(&self) -> Option<PathBuf> {
        self.backend
            .as_deref()
            .and_then(|b| b.strip_prefix("file:"))
            .map(PathBuf::from)
    }

    fn open(&self) -> anyhow::Result<Option<Box<dyn LogProbBackend>>> {
        let Some(spec) = self.backend.as_deref() else {
            return Ok(None);
        };
        let base: LogBase = self.log_base.parse().map_err(config_error)?;
        let backend: Box<dyn LogProbBackend> = if let Some(p) = spec.strip_prefix("file:") {
            let p = Path::new(p);
            if !p.exists() {
                return Err(config_error(format!("backend table {} does not exist", p.display())));
            }
            Box::new(FileBackend::open(p, base)?)
        } else if let Some(c) = spec.strip_prefix("uniform:") {
            let c: f64 = c
                .parse()
                .map_err(|_| config_error(format!("bad uniform log-probability `{c}`")))?;
            Box::new(UniformBackend::new(c))
        } else if spec.starts_with("http://") || spec.starts_with("https://") || spec.starts_with("http:") {
            let url = if spec.starts_with("http://") || spec.starts_with("https://") {
                spec
            } else {
                &spec["http:".len()..]
            };
            let opts = HttpOptions {
                timeout: Duration::from_secs(self.timeout_secs),
                retries: self.retries,
                max_in_flight: self.max_in_flight.max(1),
                base,
            };
            Box::new(HttpBackend::connect(url, opts)?)
        } else {
            return Err(config_error(format!("unrecognized backend `{spec}`")));
        };
        Ok(Some(backend))
    }
}

#[derive(Args)]
pub struct AlternateArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    lexicon: Lexicon,
    /// Backend consulted for the preposition of unlisted verbs.
    #[command(flatten)]
    backend: BackendArgs,
}

fn skip_log(w: &mut impl Write, pair_id: &str, err: &dyn std::fmt::Display) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *w, &serde_json::json!({"pair_id": pair_id, "error": err.to_string()}))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn alternate(a: AlternateArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let path = input(&a.io, cfg)?;
    let out = out_dir(&a.io, cfg)?;
    let (det, lexicon, detection) = detector(&a.lexicon, cfg)?;
    let spec = a.backend.resolve(cfg);
    let backend = spec.open()?;
    let lex_path = lexicon_inputs(&a.lexicon, cfg);
    #[derive(Serialize)]
    struct C<'a> {
        #[serde(flatten)]
        base: DetectionRun<'a>,
        backend: &'a BackendSpec,
    }
    let conf = C {
        base: DetectionRun {
            detection: &detection,
            lexicon: lex_path.as_ref().map(|p| p.display().to_string()),
        },
        backend: &spec,
    };
    let inputs = std::iter::once(path.clone()).chain(lex_path).chain(spec.file());
    let mut run = session("alternate", &conf, &out, inputs)?;
    let alternator = Alternator::new(&lexicon, backend.as_deref());
    let mut w = create(&run.output("alternations.tsv"))?;
    let mut skipped = create(&run.output("skipped.jsonl"))?;
    writeln!(w, "pair_id\tattested_form\tattested\talternant\tpreposition\tprep_fallback")?;
    let errors = read_chunks(&path, |chunk| {
        let rows: Vec<_> = chunk
            .par_iter()
            .flat_map_iter(|t| {
                det.detect_loose(t)
                    .into_iter()
                    .map(|inst| (inst.pair_id(), inst.form, alternator.realize(t, &inst)))
                    .collect::<Vec<_>>()
            })
            .collect();
        for (id, form, res) in rows {
            match res {
                Ok((att, alt, fallback)) => writeln!(
                    w,
                    "{id}\t{form}\t{}\t{}\t{}\t{fallback}",
                    att.tokens.join(" "),
                    alt.tokens.join(" "),
                    alt.preposition_form().or(att.preposition_form()).unwrap_or(""),
                )?,
                Err(e) => skip_log(&mut skipped, &id, &e)?,
            }
        }
        Ok(())
    })?;
    w.flush()?;
    skipped.flush()?;
    run.write(errors == 0)?;
    Ok(outcome(errors == 0))
}

#[derive(Args)]
pub struct SurgeryArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    lexicon: Lexicon,
    /// default, balanced, swapped, no-datives or no-2postverbal.
    #[arg(long)]
    condition: Option<String>,
    /// Attested sentences kept per form.
    #[arg(long)]
    count_per_form: Option<usize>,
    /// Inject counterfactual datives offsetting detector misses.
    #[arg(long)]
    pollute: bool,
    /// Detector miss rate over non-dative sentences.
    #[arg(long)]
    error_rate: Option<f64>,
    /// Share of the estimated misses that are DOs.
    #[arg(long)]
    do_share: Option<f64>,
    /// Sampling seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the untouched source trees as CoNLL-U.
    #[arg(long)]
    conllu: bool,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Serialize)]
struct SurgeryRun<'a> {
    #[serde(flatten)]
    base: DetectionRun<'a>,
    surgery: &'a SurgeryConfig,
    conllu: bool,
    backend: &'a BackendSpec,
}

pub fn surgery(a: SurgeryArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let path = input(&a.io, cfg)?;
    let out = out_dir(&a.io, cfg)?;
    let (det, lexicon, detection) = detector(&a.lexicon, cfg)?;
    let s = &cfg.surgery;
    let condition: Condition = a
        .condition
        .clone()
        .or_else(|| s.condition.clone())
        .ok_or_else(|| config_error("no --condition given"))?
        .parse()
        .map_err(config_error)?;
    let error_rate = a.error_rate.or(s.error_rate).unwrap_or(0.00025);
    let do_share = a.do_share.or(s.do_share).unwrap_or(2.0 / 3.0);
    if !(0.0..=1.0).contains(&error_rate) || !(0.0..=1.0).contains(&do_share) {
        return Err(config_error("--error-rate and --do-share must lie in [0, 1]"));
    }
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let surgery_cfg = SurgeryConfig {
        condition,
        count_per_form: a.count_per_form.or(s.count_per_form),
        pollution: PollutionSpec::ErrorRate { error_rate, do_share },
        inject: a.pollute || s.pollute.unwrap_or(false),
        rng_seed: seed,
    };
    let spec = a.backend.resolve(cfg);
    let backend = spec.open()?;
    let lex_path = lexicon_inputs(&a.lexicon, cfg);
    let conf = SurgeryRun {
        base: DetectionRun {
            detection: &detection,
            lexicon: lex_path.as_ref().map(|p| p.display().to_string()),
        },
        surgery: &surgery_cfg,
        conllu: a.conllu,
        backend: &spec,
    };
    let inputs = std::iter::once(path.clone()).chain(lex_path).chain(spec.file());
    let mut run = session("surgery", &conf, &out, inputs)?;
    run.seed = Some(seed);
    let mut sink = TextSink {
        text: create(&run.output("corpus.txt"))?,
        conllu: if a.conllu {
            Some(create(&run.output("passthrough.conllu"))?)
        } else {
            None
        },
    };
    let mut surgeon = CorpusSurgeon::new(
        surgery_cfg.clone(),
        &det,
        Alternator::new(&lexicon, backend.as_deref()),
    );
    let errors = read_chunks(&path, |chunk| Ok(surgeon.scan(chunk, &mut sink)?))?;
    let report = surgeon.finish(&mut sink).map_err(|e| match e {
        SurgeryError::CountExceedsAvailable { .. } | SurgeryError::InsufficientPool { .. } => {
            config_error(e.to_string())
        }
        e => e.into(),
    })?;
    sink.text.flush()?;
    if let Some(c) = sink.conllu.as_mut() {
        c.flush()?;
    }
    write_json(&run.output("report.json"), &report)?;
    info!(
        "{} output sentences, {} controlled DO / {} controlled PO",
        report.output_sentences, report.exposure.controlled.do_, report.exposure.controlled.po
    );
    run.write(errors == 0)?;
    Ok(outcome(errors == 0))
}

#[derive(Args)]
pub struct LinearizeArgs {
    #[command(flatten)]
    io: Io,
    /// short-first, long-first, random-first or long-first-headfinal.
    #[arg(long)]
    mode: String,
    /// Seed for random-first.
    #[arg(long)]
    seed: Option<u64>,
    /// Bracket every constituent.
    #[arg(long)]
    bracketed: bool,
    /// Keep the original casing.
    #[arg(long)]
    keep_case: bool,
    /// Leave punctuation out of constituent lengths.
    #[arg(long)]
    exclude_punct: bool,
    /// Also write the permuted trees as CoNLL-U.
    #[arg(long)]
    conllu: bool,
}

#[derive(Serialize)]
struct LinearizeRun {
    mode: String,
    seed: u64,
    bracketed: bool,
    lowercase: bool,
    count_punct: bool,
    conllu: bool,
}

pub fn linearize(a: LinearizeArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let path = input(&a.io, cfg)?;
    let out = out_dir(&a.io, cfg)?;
    let order: Order = a.mode.parse().map_err(config_error)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let mode = LinearizationMode { order, rng_seed: seed };
    let opts = LinearizeOptions {
        count_punct: !a.exclude_punct,
        lowercase: !a.keep_case,
    };
    let conf = LinearizeRun {
        mode: order.to_string(),
        seed,
        bracketed: a.bracketed,
        lowercase: opts.lowercase,
        count_punct: opts.count_punct,
        conllu: a.conllu,
    };
    let mut run = session("linearize", &conf, &out, [path.clone()])?;
    run.seed = Some(seed);
    let mut text = create(&run.output("linearized.txt"))?;
    let mut trees = if a.conllu {
        Some(create(&run.output("linearized.conllu"))?)
    } else {
        None
    };
    let errors = read_chunks(&path, |chunk| {
        let lines: Vec<String> = chunk
            .par_iter()
            .map(|t| {
                if a.bracketed {
                    bracketed(t, mode, &opts)
                } else {
                    relinearize(t, mode, &opts).join(" ")
                }
            })
            .collect();
        for l in lines {
            writeln!(text, "{l}")?;
        }
        if let Some(w) = trees.as_mut() {
            let permuted: Vec<DepTree> = chunk.par_iter().map(|t| relinearize_tree(t, mode, &opts)).collect();
            for t in &permuted {
                write_tree(w, t)?;
            }
        }
        Ok(())
    })?;
    text.flush()?;
    if let Some(w) = trees.as_mut() {
        w.flush()?;
    }
    run.write(errors == 0)?;
    Ok(outcome(errors == 0))
}

#[derive(Args)]
pub struct OrderReportArgs {
    #[command(flatten)]
    io: Io,
    /// Leave punctuation out of constituent lengths.
    #[arg(long)]
    exclude_punct: bool,
}

pub fn order_report(a: OrderReportArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let path = input(&a.io, cfg)?;
    let out = out_dir(&a.io, cfg)?;
    let opts = LinearizeOptions {
        count_punct: !a.exclude_punct,
        ..LinearizeOptions::default()
    };
    let mut run = session(
        "order-report",
        &serde_json::json!({"count_punct": opts.count_punct}),
        &out,
        [path.clone()],
    )?;
    let mut acc = OrderAccumulator::default();
    let errors = read_chunks(&path, |chunk| {
        for t in &chunk {
            acc.push(t, &opts);
        }
        Ok(())
    })?;
    let report = acc.finish().map_err(|e| config_error(e.to_string()))?;
    write_json(&run.output("order_report.json"), &report)?;
    run.write(errors == 0)?;
    Ok(outcome(errors == 0))
}

#[derive(Args)]
pub struct PairsArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    lexicon: Lexicon,
    /// Pairs sampled per attested form (default: all).
    #[arg(long)]
    per_form: Option<usize>,
    /// Sampling seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Only instances licensed by the lexicon.
    #[arg(long)]
    strict: bool,
    /// CSV `pair_id,recipient_animate,theme_animate`.
    #[arg(long)]
    animacy: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
}

pub fn pairs(a: PairsArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let path = input(&a.io, cfg)?;
    let out = out_dir(&a.io, cfg)?;
    let (det, lexicon, detection) = detector(&a.lexicon, cfg)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let animacy = match &a.animacy {
        Some(p) => Some(read_animacy(
            File::open(p).map_err(|e| config_error(format!("cannot read {}: {e}", p.display())))?,
        )?),
        None => None,
    };
    let spec = a.backend.resolve(cfg);
    let backend = spec.open()?;
    let lex_path = lexicon_inputs(&a.lexicon, cfg);
    #[derive(Serialize)]
    struct C<'a> {
        #[serde(flatten)]
        base: DetectionRun<'a>,
        per_form: Option<usize>,
        seed: u64,
        strict: bool,
        animacy: Option<String>,
        backend: &'a BackendSpec,
    }
    let conf = C {
        base: DetectionRun {
            detection: &detection,
            lexicon: lex_path.as_ref().map(|p| p.display().to_string()),
        },
        per_form: a.per_form,
        seed,
        strict: a.strict,
        animacy: a.animacy.as_ref().map(|p| p.display().to_string()),
        backend: &spec,
    };
    let inputs = std::iter::once(path.clone())
        .chain(lex_path)
        .chain(a.animacy.clone())
        .chain(spec.file());
    let mut run = session("pairs", &conf, &out, inputs)?;
    run.seed = Some(seed);
    let alternator = Alternator::new(&lexicon, backend.as_deref());
    let mut skipped = create(&run.output("skipped.jsonl"))?;
    let mut all: Vec<AlternationPair> = Vec::new();
    let errors = read_chunks(&path, |chunk| {
        let rows: Vec<_> = chunk
            .par_iter()
            .flat_map_iter(|t| {
                det.detect_loose(t)
                    .into_iter()
                    .filter(|i| !a.strict || i.strict)
                    .map(|inst| (inst.pair_id(), alternator.pair(t, &inst)))
                    .collect::<Vec<_>>()
            })
            .collect();
        for (id, res) in rows {
            match res {
                Ok(p) => all.push(p),
                Err(e) => skip_log(&mut skipped, &id, &e)?,
            }
        }
        Ok(())
    })?;
    skipped.flush()?;
    let mut chosen = match a.per_form {
        Some(n) => sample_per_form(all, n, seed),
        None => all,
    };
    if let Some(labels) = &animacy {
        let mut missing = 0;
        for p in &mut chosen {
            match labels.get(&p.pair_id) {
                Some(l) => p.apply(l),
                None => missing += 1,
            }
        }
        if missing > 0 {
            warn!("{missing} pairs have no animacy label; treated as inanimate");
        }
    }
    let mut w = create(&run.output("pairs.jsonl"))?;
    for p in &chosen {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    info!("{} pairs", chosen.len());
    run.write(errors == 0)?;
    Ok(outcome(errors == 0))
}

#[derive(Args)]
pub struct ScoreArgs {
    /// Pairs file from `pairs`.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
    /// Condition label carried into the records.
    #[arg(long, default_value = "default")]
    condition: String,
    #[arg(long)]
    batch_size: Option<usize>,
    #[command(flatten)]
    backend: BackendArgs,
}

fn read_pairs(path: &Path) -> anyhow::Result<Vec<AlternationPair>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| config_error(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn score(a: ScoreArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let path = require_input(a.pairs.clone(), None, "pairs file")?;
    let out = a
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| config_error("no --out-dir given"))?;
    let spec = a.backend.resolve(cfg);
    let batch_size = a.batch_size.or(cfg.score.batch_size).unwrap_or(32);
    let backend = spec.open()?.ok_or_else(|| config_error("no --backend given"))?;
    #[derive(Serialize)]
    struct C<'a> {
        condition: &'a str,
        batch_size: usize,
        backend: &'a BackendSpec,
    }
    let conf = C {
        condition: &a.condition,
        batch_size,
        backend: &spec,
    };
    let mut run = session("score", &conf, &out, std::iter::once(path.clone()).chain(spec.file()))?;
    let pairs = read_pairs(&path)?;
    let eval = evaluate_pairs(&pairs, backend.as_ref(), batch_size);
    let groups = vec![(a.condition.clone(), eval.records)];
    dative_core::report::write_records(create(&run.output("records.csv"))?, &groups)?;
    let mut f = create(&run.output("failures.jsonl"))?;
    for fail in &eval.failures {
        warn!("{}: {}", fail.pair_id, fail.message);
        serde_json::to_writer(&mut f, fail)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    let complete = eval.failures.is_empty();
    run.write(complete)?;
    Ok(outcome(complete))
}

#[derive(Args)]
pub struct ReportArgs {
    /// One or more `records.csv` files.
    #[arg(long, required = true, num_args = 1..)]
    records: Vec<PathBuf>,
    /// CSV `verb,score` of external judgments.
    #[arg(long)]
    judgments: Option<PathBuf>,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
}

pub fn report(a: ReportArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let out = a
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| config_error("no --out-dir given"))?;
    let mut inputs = Vec::new();
    for p in &a.records {
        inputs.push(require_input(Some(p.clone()), None, "records file")?);
    }
    if let Some(j) = &a.judgments {
        inputs.push(require_input(Some(j.clone()), None, "judgments file")?);
    }
    let conf = serde_json::json!({
        "records": a.records.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "judgments": a.judgments.as_ref().map(|p| p.display().to_string()),
    });
    let mut run = session("report", &conf, &out, inputs)?;
    let mut groups: Vec<(String, Vec<_>)> = Vec::new();
    for p in &a.records {
        for (cond, recs) in read_records(File::open(p)?)? {
            match groups.iter_mut().find(|(c, _)| *c == cond) {
                Some((_, v)) => v.extend(recs),
                None => groups.push((cond, recs)),
            }
        }
    }
    let judgments = match &a.judgments {
        Some(j) => Some(read_judgments(File::open(j)?)?),
        None => None,
    };
    // reserve the names before emitting so the manifest hashes them
    for name in ["records.csv", "report.json", "panels.csv"] {
        run.output(name);
    }
    emit_report(&out, &groups, judgments.as_ref())?;
    run.write(true)?;
    Ok(Outcome::Complete)
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
    /// Mixed-category sentences.
    #[arg(long, default_value_t = 0)]
    sentences: usize,
    /// Extra DO sentences.
    #[arg(long = "do", default_value_t = 0)]
    do_: usize,
    /// Extra PO sentences.
    #[arg(long, default_value_t = 0)]
    po: usize,
    /// Generator seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
}

pub fn synth(a: SynthArgs, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let out = a
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| config_error("no --out-dir given"))?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let conf = serde_json::json!({"sentences": a.sentences, "do": a.do_, "po": a.po, "seed": seed});
    let mut run = session("synth", &conf, &out, [])?;
    run.seed = Some(seed);
    let mut w = create(&run.output("corpus.conllu"))?;
    for t in do_fixtures(a.do_, seed) {
        write_tree(&mut w, &t)?;
    }
    for t in po_fixtures(a.po, seed) {
        write_tree(&mut w, &t)?;
    }
    for (_, t) in synthetic_corpus(a.sentences, seed) {
        write_tree(&mut w, &t)?;
    }
    w.flush()?;
    run.write(true)?;
    Ok(Outcome::Complete)
}
