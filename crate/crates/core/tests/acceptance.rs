//! Exit criteria. Each test prints one `PASS`/`FAIL` line to stderr, outside
//! the harness capture, so the verdicts appear in plain `cargo test` output.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufReader, Write};
use std::time::{Duration, Instant};

use dative_core::alternation::{Alternator, Realization};
use dative_core::backend::{FileBackend, HttpBackend, HttpOptions, LogProbBackend, ScoredSentence, UniformBackend};
use dative_core::detect::{DativeForm, Detector};
use dative_core::eval::{do_preference, evaluate_pairs, geo_mean_perplexity, PreferenceRecord};
use dative_core::lexicon::VerbLexicon;
use dative_core::linearize::{
    head_inversions, inversion_score, relinearize, relinearize_tree, Direction, LinearizationMode,
    LinearizeOptions, Order,
};
use dative_core::stats::{fit_ols, pearson, zscore, INTERCEPT};
use dative_core::surgery::{
    plan_pollution, Condition, CorpusSurgeon, CountingSink, FormCounts, PollutionPlan, PollutionSpec,
    SurgeryConfig, SurgeryReport,
};
use dative_core::synth::{do_fixtures, po_fixtures, synthetic_corpus, synthetic_sentence, SynthKind};
use dative_core::treebank::{emit_treebank, parse_treebank, DepTree, Token, TreebankReader};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(name: &str, ok: bool, detail: &str) {
    let line = format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(ok, "{line}");
}

fn fixtures() -> Vec<DepTree> {
    let parsed = parse_treebank(include_bytes!("data/fixtures.conllu"));
    assert!(parsed.errors.is_empty(), "{:?}", parsed.errors);
    parsed.trees
}

fn fixture(id: &str) -> DepTree {
    fixtures().into_iter().find(|t| t.sentence_id == id).unwrap()
}

#[test]
fn linearization_conformance() {
    let start = Instant::now();
    let tree = fixture("fork-eat");
    let opts = LinearizeOptions::default();
    let expected = [
        (Order::ShortFirst, "he uses a fork to eat the green melon from the shop"),
        (Order::LongFirst, "from the shop the melon green eat to uses a fork he"),
        (Order::LongFirstHeadFinal, "the shop from the green melon to eat a fork he uses"),
    ];
    let mut failures = Vec::new();
    for (order, want) in expected {
        let got = relinearize(&tree, LinearizationMode::new(order), &opts).join(" ");
        if got != want {
            failures.push(format!("{order}: `{got}`"));
        }
    }
    let a = relinearize(&tree, LinearizationMode::random(7), &opts);
    let b = relinearize(&tree, LinearizationMode::random(7), &opts);
    if a != b {
        failures.push("random-first not deterministic".into());
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(1);
    verdict(
        "linearization conformance on the fork sentence",
        ok,
        &format!("{} mismatches, {elapsed:?} {}", failures.len(), failures.join("; ")),
    );
}

fn random_tree(rng: &mut ChaCha8Rng, id: &str) -> DepTree {
    let n = rng.random_range(1..=15usize);
    // random attachment order over random surface positions
    let mut positions: Vec<usize> = (1..=n).collect();
    for i in (1..n).rev() {
        positions.swap(i, rng.random_range(0..=i));
    }
    let mut head = vec![0usize; n + 1];
    for k in 1..n {
        head[positions[k]] = positions[rng.random_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|i| Token::new(i, format!("w{i}"), format!("w{i}"), "X", head[i], "dep"))
        .collect();
    DepTree::new(id, tokens, BTreeMap::new()).unwrap()
}

/// Subtree sizes by walking every node's ancestor chain.
fn brute_sizes(tree: &DepTree) -> Vec<u64> {
    let n = tree.len();
    let mut size = vec![0u64; n + 1];
    for t in tree.tokens() {
        let mut cur = t.index;
        loop {
            size[cur] += 1;
            let h = tree.tokens()[cur - 1].head;
            if h == 0 {
                break;
            }
            cur = h;
        }
    }
    size
}

/// Adjacent swaps bubble sort needs to order `v` under `before(a, b)`.
fn bubble_swaps(mut v: Vec<u64>, out_of_order: impl Fn(u64, u64) -> bool) -> u64 {
    let mut swaps = 0;
    for end in (1..v.len()).rev() {
        for i in 0..end {
            if out_of_order(v[i], v[i + 1]) {
                v.swap(i, i + 1);
                swaps += 1;
            }
        }
    }
    swaps
}

#[test]
fn inversion_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = LinearizeOptions::default();
    let (mut mismatches, mut tie_free, mut sum_failures) = (0, 0, 0);
    for k in 0..1000 {
        let tree = random_tree(&mut rng, &format!("r{k}"));
        let size = brute_sizes(&tree);
        let mut oracle_short = BTreeMap::new();
        let mut oracle_long = BTreeMap::new();
        let mut has_tie = false;
        let mut eligible = false;
        for h in 1..=tree.len() {
            let kids: Vec<u64> = tree
                .tokens()
                .iter()
                .filter(|t| t.head == h)
                .map(|t| size[t.index])
                .collect();
            if kids.len() < 2 {
                continue;
            }
            eligible = true;
            let distinct: BTreeSet<u64> = kids.iter().copied().collect();
            has_tie |= distinct.len() < kids.len();
            oracle_short.insert(h, bubble_swaps(kids.clone(), |a, b| a > b));
            oracle_long.insert(h, bubble_swaps(kids, |a, b| a < b));
        }
        let got_short: BTreeMap<usize, u64> = head_inversions(&tree, Direction::ShortFirst, &opts)
            .iter()
            .map(|h| (h.head, h.inversions))
            .collect();
        let got_long: BTreeMap<usize, u64> = head_inversions(&tree, Direction::LongFirst, &opts)
            .iter()
            .map(|h| (h.head, h.inversions))
            .collect();
        let total_short: u64 = oracle_short.values().sum();
        if got_short != oracle_short
            || got_long != oracle_long
            || inversion_score(&tree, Direction::ShortFirst).inversions != total_short
        {
            mismatches += 1;
        }
        if eligible && !has_tie {
            tie_free += 1;
            let s = inversion_score(&tree, Direction::ShortFirst);
            let l = inversion_score(&tree, Direction::LongFirst);
            if s.inversions + l.inversions != s.max_inversions || (s.normalized + l.normalized - 1.0).abs() > 1e-12 {
                sum_failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches == 0 && sum_failures == 0 && tie_free >= 50 && elapsed < Duration::from_secs(10);
    verdict(
        "inversion score equals bubble-sort swap count",
        ok,
        &format!(
            "1000 trees, {mismatches} mismatches, {tie_free} tie-free trees with {sum_failures} sum failures, {elapsed:?}"
        ),
    );
}

fn has_sibling_ties(tree: &DepTree) -> bool {
    let deps = tree.dependents();
    let sizes = tree.subtree_sizes(&deps);
    (1..=tree.len()).any(|h| {
        let kids: Vec<usize> = deps.of(h).iter().map(|&c| sizes[c]).collect();
        let distinct: BTreeSet<usize> = kids.iter().copied().collect();
        distinct.len() < kids.len()
    })
}

fn fixture_corpus() -> Vec<DepTree> {
    let mut trees = fixtures();
    trees.extend(do_fixtures(60, 5));
    trees.extend(po_fixtures(60, 6));
    trees.extend(synthetic_corpus(500, 7).map(|(_, t)| t));
    trees
}

#[test]
fn post_linearization_fixpoint() {
    let opts = LinearizeOptions::default();
    let trees = fixture_corpus();
    let (mut short_bad, mut long_bad, mut tie_free) = (0, 0, 0);
    for t in &trees {
        let short = relinearize_tree(t, LinearizationMode::new(Order::ShortFirst), &opts);
        if inversion_score(&short, Direction::ShortFirst).inversions != 0 {
            short_bad += 1;
        }
        if !has_sibling_ties(t) {
            let long = relinearize_tree(t, LinearizationMode::new(Order::LongFirst), &opts);
            let s = inversion_score(&long, Direction::ShortFirst);
            if s.eligible_heads > 0 {
                tie_free += 1;
                if s.inversions != s.max_inversions {
                    long_bad += 1;
                }
            }
        }
    }
    verdict(
        "re-linearized trees are fixpoints of the inversion score",
        short_bad == 0 && long_bad == 0 && tie_free > 0,
        &format!(
            "{} trees: {short_bad} short-first outputs with inversions, {long_bad} of {tie_free} tie-free long-first outputs not fully inverted",
            trees.len()
        ),
    );
}

fn multiset(tokens: &[String]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for t in tokens {
        *m.entry(t.clone()).or_insert(0) += 1;
    }
    m
}

#[test]
fn alternation_round_trip() {
    let det = Detector::default();
    let mut trees = vec![fixture("gave-do"), fixture("gave-po"), fixture("baked-do"), fixture("baked-po")];
    trees.extend(do_fixtures(30, 11));
    trees.extend(po_fixtures(30, 12));
    let mut failures = Vec::new();
    let mut checked = 0;
    for t in &trees {
        let inst = det.detect_loose(t);
        if inst.len() != 1 {
            failures.push(format!("{}: {} instances", t.sentence_id, inst.len()));
            continue;
        }
        let inst = &inst[0];
        let r = Realization::from_instance(t, inst).unwrap();
        checked += 1;
        let (do_r, po_r) = match inst.form {
            DativeForm::Do => {
                let prep = if ["bake", "buy", "make", "cook", "build", "find", "get"]
                    .contains(&inst.verb_lemma.as_str())
                {
                    "for"
                } else {
                    "to"
                };
                let po = r.to_po(prep).unwrap();
                if po.to_do().unwrap().tokens != r.tokens {
                    failures.push(format!("{}: po_to_do . do_to_po != id", t.sentence_id));
                }
                (r.clone(), po)
            }
            DativeForm::Po => {
                let prep = r.preposition_form().unwrap().to_string();
                let do_ = r.to_do().unwrap();
                if do_.to_po(&prep).unwrap().tokens != r.tokens {
                    failures.push(format!("{}: do_to_po . po_to_do != id", t.sentence_id));
                }
                (do_, r.clone())
            }
        };
        let mut extra = multiset(&po_r.tokens);
        for (k, v) in multiset(&do_r.tokens) {
            let e = extra.get_mut(&k).map(|c| {
                *c -= v.min(*c);
                *c
            });
            if e == Some(0) {
                extra.remove(&k);
            }
        }
        let extra_ok = po_r.tokens.len() == do_r.tokens.len() + 1
            && extra.len() == 1
            && extra.keys().all(|k| k == "to" || k == "for");
        if !extra_ok {
            failures.push(format!("{}: PO is not DO plus one preposition", t.sentence_id));
        }
    }
    let gave_do = fixture("gave-do");
    let gave_po = fixture("gave-po");
    let d = Realization::from_instance(&gave_do, &det.detect_loose(&gave_do)[0]).unwrap();
    let p = Realization::from_instance(&gave_po, &det.detect_loose(&gave_po)[0]).unwrap();
    if d.to_po("to").unwrap().tokens != gave_po.forms() || p.to_do().unwrap().tokens != gave_do.forms() {
        failures.push("gave the dog a bone pair does not map onto itself".into());
    }
    verdict(
        "alternation round trip",
        failures.is_empty() && checked >= 50,
        &format!("{checked} fixtures, failures: {failures:?}"),
    );
}

#[test]
fn detection() {
    let lexicon = VerbLexicon::builtin();
    let strict_det = Detector::new(Default::default(), Some(lexicon));
    let loose_det = Detector::default();
    let mut subset_violations = 0;
    let mut corpora: Vec<Vec<DepTree>> = vec![fixtures(), fixture_corpus()];
    corpora.push(synthetic_corpus(5000, 99).map(|(_, t)| t).collect());
    for corpus in &corpora {
        let with_lex = strict_det.partition_corpus(corpus);
        let without = loose_det.partition_corpus(corpus);
        let loose: BTreeSet<String> = without.instances.iter().map(|i| i.pair_id()).collect();
        let loose_again: BTreeSet<String> = with_lex.instances.iter().map(|i| i.pair_id()).collect();
        let strict: BTreeSet<String> = with_lex
            .instances
            .iter()
            .filter(|i| i.strict)
            .map(|i| i.pair_id())
            .collect();
        if !strict.is_subset(&loose) || loose != loose_again {
            subset_violations += 1;
        }
    }

    let p = loose_det.partition_corpus(&fixtures());
    let set = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    let forms: BTreeMap<String, (DativeForm, Option<String>)> = p
        .instances
        .iter()
        .map(|i| (i.sentence_id.clone(), (i.form, i.preposition.clone())))
        .collect();
    let want_forms: BTreeMap<String, (DativeForm, Option<String>)> = [
        ("gave-do", DativeForm::Do, None),
        ("gave-po", DativeForm::Po, Some("to")),
        ("baked-do", DativeForm::Do, None),
        ("baked-po", DativeForm::Po, Some("for")),
        ("sent-it", DativeForm::Po, Some("to")),
    ]
    .into_iter()
    .map(|(id, f, prep)| (id.to_string(), (f, prep.map(String::from))))
    .collect();
    let sets_ok = p.datives == set(&["gave-do", "gave-po", "baked-do", "baked-po", "sent-it"])
        && p.ambiguous == set(&["telling", "japan"])
        && p.non_datives == set(&["melon", "sprayed", "melon-fork", "fork-eat", "ran"])
        && p.two_postverbal == set(&["sprayed", "melon-fork"])
        && forms == want_forms;
    verdict(
        "detection classifies the schema fixtures and strict is within loose",
        subset_violations == 0 && sets_ok,
        &format!(
            "{subset_violations} corpora violate strict within loose; datives {:?}, ambiguous {:?}, non-datives {:?}",
            p.datives, p.ambiguous, p.non_datives
        ),
    );
}

fn surgery_run(trees: &[DepTree], config: SurgeryConfig) -> SurgeryReport {
    let lexicon = VerbLexicon::builtin();
    let det = Detector::default();
    let mut surgeon = CorpusSurgeon::new(config, &det, Alternator::new(&lexicon, None));
    let mut sink = CountingSink::default();
    for chunk in trees.chunks(8192) {
        surgeon.scan(chunk.to_vec(), &mut sink).unwrap();
    }
    let report = surgeon.finish(&mut sink).unwrap();
    assert_eq!(report.output_sentences as usize, sink.count);
    report
}

fn condition(c: Condition, count: Option<usize>, plan: PollutionPlan, seed: u64) -> SurgeryConfig {
    SurgeryConfig {
        condition: c,
        count_per_form: count,
        pollution: PollutionSpec::Plan(plan),
        inject: c != Condition::Default,
        rng_seed: seed,
    }
}

fn fc(do_: u64, po: u64) -> FormCounts {
    FormCounts { do_, po }
}

#[test]
fn pollution_arithmetic() {
    let mut notes = Vec::new();
    let plan = plan_pollution(9_000_000, 0.00025, 2.0 / 3.0);
    let plan_ok = (plan.estimated_false_negatives, plan.insert_do, plan.insert_po) == (2250, 1500, 750)
        && plan == plan_pollution(9_000_000, 1.0 / 4000.0, 2.0 / 3.0);
    notes.push(format!(
        "plan ({}, {}, {})",
        plan.estimated_false_negatives, plan.insert_do, plan.insert_po
    ));

    // exposure table at full scale
    let mut corpus = do_fixtures(67_500, 1);
    corpus.extend(po_fixtures(67_500, 2));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..3000 {
        let kind = [SynthKind::Transitive, SynthKind::Intransitive, SynthKind::TwoPostverbal][i % 3];
        corpus.push(synthetic_sentence(&format!("nd{i:05}"), kind, &mut rng));
    }
    let rows = [
        (Condition::Default, Some(66_822), fc(66_822, 66_822), fc(0, 0), fc(68_322, 67_572)),
        (Condition::Balanced, Some(32_850), fc(65_700, 65_700), fc(1500, 750), fc(68_700, 67_200)),
        (Condition::NoDatives, None, fc(0, 0), fc(1500, 750), fc(3000, 1500)),
        (Condition::No2Postverbal, None, fc(0, 0), fc(1500, 750), fc(3000, 1500)),
    ];
    let mut table_ok = true;
    for (c, count, controlled, cf, total) in rows {
        let r = surgery_run(&corpus, condition(c, count, plan, 42));
        let e = r.exposure;
        let row_ok = e.controlled == controlled
            && e.false_negatives_estimate == fc(1500, 750)
            && e.counterfactuals == cf
            && e.total == total;
        table_ok &= row_ok;
        notes.push(format!("{c} total {}/{}", e.total.do_, e.total.po));
    }

    // equal configured totals give equal exposure totals
    let small_plan = PollutionPlan {
        estimated_false_negatives: 6,
        insert_do: 4,
        insert_po: 2,
        error_rate: 0.0,
        do_share: 2.0 / 3.0,
    };
    let mut small = do_fixtures(40, 8);
    small.extend(po_fixtures(40, 9));
    let d = surgery_run(&small, condition(Condition::Default, Some(23), small_plan, 1));
    let b = surgery_run(&small, condition(Condition::Balanced, Some(10), small_plan, 1));
    let equal_ok = d.exposure.total.total() == 52 && b.exposure.total.total() == 52;
    notes.push(format!(
        "default C=23 vs balanced C=10: {} vs {}",
        d.exposure.total.total(),
        b.exposure.total.total()
    ));
    verdict(
        "pollution plan and exposure table",
        plan_ok && table_ok && equal_ok,
        &notes.join(", "),
    );
}

fn pairs_from_fixtures() -> Vec<dative_core::alternation::AlternationPair> {
    let lexicon = VerbLexicon::builtin();
    let det = Detector::default();
    let alt = Alternator::new(&lexicon, None);
    let mut trees = do_fixtures(100, 21);
    trees.extend(po_fixtures(100, 22));
    trees
        .iter()
        .flat_map(|t| {
            det.detect_loose(t)
                .into_iter()
                .map(|i| alt.pair(t, &i).unwrap())
                .collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn scoring_identities() {
    let pairs = pairs_from_fixtures();
    let mut zero_ok = true;
    for c in [-2.5, -1.0, -7.25] {
        let e = evaluate_pairs(&pairs, &UniformBackend::new(c), 16);
        zero_ok &= e.is_complete() && e.records.len() == pairs.len() && e.records.iter().all(|r| r.score == 0.0);
    }
    // the same stub materialized as a lookup table
    let table = FileBackend::from_entries(
        "stub",
        pairs.iter().flat_map(|p| {
            [&p.do_sentence, &p.po_sentence]
                .map(|s| (s.join(" "), -3.0 * s.len() as f64, s.len()))
        }),
    );
    let e = evaluate_pairs(&pairs, &table, 7);
    zero_ok &= e.is_complete() && e.records.iter().all(|r| r.score == 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let a = ScoredSentence {
            text: vec![],
            total_logprob: -rng.random_range(0.0..200.0),
            token_count: rng.random_range(1..60),
        };
        let b = ScoredSentence {
            text: vec![],
            total_logprob: -rng.random_range(0.0..200.0),
            token_count: rng.random_range(1..60),
        };
        worst = worst.max((do_preference(&a, &b).unwrap() + do_preference(&b, &a).unwrap()).abs());
    }
    let antisym_ok = worst <= 1e-12;

    let s = |ppl: f64, n: usize| ScoredSentence {
        text: vec![],
        total_logprob: -ppl.ln() * n as f64,
        token_count: n,
    };
    let g = geo_mean_perplexity(&[s(2.0, 3), s(8.0, 5)]).unwrap();
    let geo_ok = (g - 4.0).abs() <= 1e-12;
    verdict(
        "scoring identities",
        zero_ok && antisym_ok && geo_ok,
        &format!(
            "uniform stub zero: {zero_ok}, max anti-symmetry residual {worst:e}, geometric mean of 2 and 8 = {g}"
        ),
    );
}

#[test]
fn statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 300;
    let length: Vec<f64> = (0..n)
        .map(|_| (rng.random_range(1..9) as f64).ln() - (rng.random_range(1..9) as f64).ln())
        .collect();
    let animacy: Vec<f64> = (0..n).map(|_| rng.random_range(-1..=1) as f64).collect();
    let y: Vec<f64> = length.iter().map(|l| 0.5 - 0.174 * l).collect();
    let fit = fit_ols(&["length_diff", "animacy_diff"], &[length, animacy], &y).unwrap();
    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    let ols_ok = rel(fit.coefficients[INTERCEPT], 0.5) <= 1e-9
        && rel(fit.coefficients["length_diff"], -0.174) <= 1e-9
        && fit.coefficients["animacy_diff"].abs() <= 1e-9;

    let z = zscore(&[1.0, 2.0, 3.0]).unwrap();
    let z_ok = z.iter().zip([-1.0, 0.0, 1.0]).all(|(a, b)| (a - b).abs() <= 1e-15);

    let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 1.0, 4.0]).unwrap();
    let r_ok = r == 0.5;
    verdict(
        "statistics",
        ols_ok && z_ok && r_ok,
        &format!(
            "ols length slope {} (ok: {ols_ok}), zscore {z:?} (ok: {z_ok}), pearson([1,2,3],[2,1,4]) = {r} against expected 0.5 (ok: {r_ok})",
            fit.coefficients["length_diff"]
        ),
    );
}

#[test]
fn throughput() {
    let bytes = emit_treebank(&synthetic_corpus(100_000, 77).map(|(_, t)| t).collect::<Vec<_>>());
    let start = Instant::now();
    let lexicon = VerbLexicon::builtin();
    let det = Detector::new(Default::default(), Some(lexicon.clone()));
    let mut config = SurgeryConfig::new(Condition::Balanced);
    config.count_per_form = Some(2000);
    config.pollution = PollutionSpec::ErrorRate {
        error_rate: 0.00025,
        do_share: 2.0 / 3.0,
    };
    config.inject = true;
    let mut surgeon = CorpusSurgeon::new(config, &det, Alternator::new(&lexicon, None));
    let mut sink = CountingSink::default();
    let opts = LinearizeOptions::default();
    let (mut sentences, mut datives, mut words) = (0usize, 0usize, 0usize);
    let mut chunk = Vec::with_capacity(4096);
    let mut flush = |chunk: Vec<DepTree>, surgeon: &mut CorpusSurgeon, sink: &mut CountingSink| {
        use rayon::prelude::*;
        let p = det.partition_corpus(&chunk);
        datives += p.datives.len();
        words += chunk
            .par_iter()
            .map(|t| relinearize(t, LinearizationMode::new(Order::ShortFirst), &opts).len())
            .sum::<usize>();
        sentences += chunk.len();
        surgeon.scan(chunk, sink).unwrap();
    };
    for tree in TreebankReader::new(BufReader::new(&bytes[..])) {
        chunk.push(tree.unwrap());
        if chunk.len() == 4096 {
            flush(std::mem::take(&mut chunk), &mut surgeon, &mut sink);
        }
    }
    flush(chunk, &mut surgeon, &mut sink);
    let report = surgeon.finish(&mut sink).unwrap();
    let elapsed = start.elapsed();
    verdict(
        "throughput on 100k synthetic sentences",
        sentences == 100_000 && elapsed < Duration::from_secs(60) && report.output_sentences > 0,
        &format!(
            "{sentences} sentences, {datives} datives, {words} words re-linearized, {} output sentences in {elapsed:?}",
            report.output_sentences
        ),
    );
}

/// Needs a live scoring service; reported as skipped without one.
#[test]
fn end_to_end_length_sign() {
    let Ok(url) = std::env::var("DATIVE_SCORER_URL") else {
        let _ = writeln!(
            std::io::stderr(),
            "SKIP end-to-end length correlation sign: DATIVE_SCORER_URL not set"
        );
        return;
    };
    let backend = HttpBackend::connect(&url, HttpOptions::default()).unwrap();
    let mut pairs = pairs_from_fixtures();
    pairs.truncate(200);
    let e = evaluate_pairs(&pairs, &backend as &dyn LogProbBackend, 16);
    let records: Vec<PreferenceRecord> = e.records;
    let len: Vec<f64> = records.iter().map(|r| r.length_diff).collect();
    let y: Vec<f64> = records.iter().map(|r| r.score).collect();
    let r = pearson(&len, &y).unwrap();
    verdict(
        "end-to-end length correlation sign",
        r < 0.0,
        &format!("{} pairs, r = {r}", records.len()),
    );
}
