//! Per-condition, per-seed summaries and their on-disk forms.
//!
//! `records.csv` holds one row per preference record with a leading
//! `condition` column and reads back into identical records.
//! `report.json` holds correlations and regression fits per condition and
//! seed, plus a pooled entry per condition. `panels.csv` has one row per
//! (condition, seed) with the two correlations; undefined cells are empty.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alternation::AnimacyLabel;
use crate::detect::DativeForm;
use crate::eval::PreferenceRecord;
use crate::stats::{ols, pearson, verb_level_compare, Predictor, RegressionResult, VerbComparison};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordRow {
    condition: String,
    pair_id: String,
    verb_lemma: String,
    score: f64,
    length_diff: f64,
    animacy_diff: i8,
    seed_label: String,
    attested: DativeForm,
}

pub fn write_records<W: Write>(out: W, groups: &[(String, Vec<PreferenceRecord>)]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let mut any = false;
    for (condition, records) in groups {
        for r in records {
            any = true;
            w.serialize(RecordRow {
                condition: condition.clone(),
                pair_id: r.pair_id.clone(),
                verb_lemma: r.verb_lemma.clone(),
                score: r.score,
                length_diff: r.length_diff,
                animacy_diff: r.animacy_diff,
                seed_label: r.seed_label.clone(),
                attested: r.attested,
            })?;
        }
    }
    if !any {
        w.write_record([
            "condition",
            "pair_id",
            "verb_lemma",
            "score",
            "length_diff",
            "animacy_diff",
            "seed_label",
            "attested",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `records.csv` back, grouped by condition in first-seen order.
pub fn read_records<R: Read>(input: R) -> Result<Vec<(String, Vec<PreferenceRecord>)>, ReportError> {
    let mut groups: Vec<(String, Vec<PreferenceRecord>)> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: RecordRow = row?;
        let rec = PreferenceRecord {
            pair_id: row.pair_id,
            verb_lemma: row.verb_lemma,
            score: row.score,
            length_diff: row.length_diff,
            animacy_diff: row.animacy_diff,
            seed_label: row.seed_label,
            attested: row.attested,
        };
        match groups.iter_mut().find(|(c, _)| *c == row.condition) {
            Some((_, v)) => v.push(rec),
            None => groups.push((row.condition, vec![rec])),
        }
    }
    Ok(groups)
}

/// Plain `verb,score` CSV with a header row.
pub fn read_judgments<R: Read>(input: R) -> Result<HashMap<String, f64>, ReportError> {
    #[derive(Deserialize)]
    struct Row {
        verb: String,
        score: f64,
    }
    let mut out = HashMap::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: Row = row?;
        out.insert(row.verb, row.score);
    }
    Ok(out)
}

/// `pair_id,recipient_animate,theme_animate` CSV with a header row.
pub fn read_animacy<R: Read>(input: R) -> Result<HashMap<String, AnimacyLabel>, ReportError> {
    let mut out = HashMap::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let label: AnimacyLabel = row?;
        out.insert(label.pair_id.clone(), label);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed_label: String,
    pub n: usize,
    pub r_length_diff: Option<f64>,
    pub r_animacy_diff: Option<f64>,
    pub ols: Option<RegressionResult>,
    pub ols_error: Option<String>,
    pub verb_comparison: Option<VerbComparison>,
    pub verb_comparison_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub seeds: Vec<SeedSummary>,
    pub pooled: SeedSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub conditions: Vec<ConditionSummary>,
}

fn summarize(label: &str, records: &[PreferenceRecord], judgments: Option<&HashMap<String, f64>>) -> SeedSummary {
    let y: Vec<f64> = records.iter().map(|r| r.score).collect();
    let len: Vec<f64> = records.iter().map(|r| r.length_diff).collect();
    let anim: Vec<f64> = records.iter().map(|r| f64::from(r.animacy_diff)).collect();
    let (ols, ols_error) = match ols(records, &[Predictor::LengthDiff, Predictor::AnimacyDiff]) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (verb_comparison, verb_comparison_error) = match judgments.map(|j| verb_level_compare(records, j)) {
        Some(Ok(c)) => (Some(c), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, None),
    };
    SeedSummary {
        seed_label: label.to_string(),
        n: records.len(),
        r_length_diff: pearson(&len, &y).ok(),
        r_animacy_diff: pearson(&anim, &y).ok(),
        ols,
        ols_error,
        verb_comparison,
        verb_comparison_error,
    }
}

pub fn build_report(groups: &[(String, Vec<PreferenceRecord>)], judgments: Option<&HashMap<String, f64>>) -> Report {
    let conditions = groups
        .iter()
        .map(|(condition, records)| {
            let mut by_seed: BTreeMap<&str, Vec<PreferenceRecord>> = BTreeMap::new();
            for r in records {
                by_seed.entry(&r.seed_label).or_default().push(r.clone());
            }
            ConditionSummary {
                condition: condition.clone(),
                seeds: by_seed
                    .iter()
                    .map(|(label, recs)| summarize(label, recs, judgments))
                    .collect(),
                pooled: summarize("pooled", records, judgments),
            }
        })
        .collect();
    Report { conditions }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_panels<W: Write>(out: W, report: &Report) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["condition", "seed_label", "n", "r_length_diff", "r_animacy_diff"])?;
    for c in &report.conditions {
        for s in &c.seeds {
            w.write_record([
                c.condition.clone(),
                s.seed_label.clone(),
                s.n.to_string(),
                cell(s.r_length_diff),
                cell(s.r_animacy_diff),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `records.csv`, `report.json` and `panels.csv` into `dir`.
pub fn emit_report(
    dir: &Path,
    groups: &[(String, Vec<PreferenceRecord>)],
    judgments: Option<&HashMap<String, f64>>,
) -> Result<Report, ReportError> {
    fs::create_dir_all(dir)?;
    write_records(fs::File::create(dir.join("records.csv"))?, groups)?;
    let report = build_report(groups, judgments);
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    fs::write(dir.join("report.json"), json)?;
    write_panels(fs::File::create(dir.join("panels.csv"))?, &report)?;
    Ok(report)
}
