//! DO-preference scoring, covariate encoding and the perplexity diagnostic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alternation::AlternationPair;
use crate::backend::{BackendError, LogProbBackend, ScoredSentence};
use crate::detect::DativeForm;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("scored sentence has zero tokens")]
    ZeroTokens,
    #[error("argument span has zero length")]
    ZeroLengthSpan,
    #[error("perplexity needs at least one sentence")]
    Empty,
}

/// Length-normalized log-probability of the DO minus that of the PO.
/// Positive means the DO is preferred.
pub fn do_preference(do_: &ScoredSentence, po: &ScoredSentence) -> Result<f64, EvalError> {
    if do_.token_count == 0 || po.token_count == 0 {
        return Err(EvalError::ZeroTokens);
    }
    Ok(do_.total_logprob / do_.token_count as f64 - po.total_logprob / po.token_count as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Features {
    /// `ln(recipient_len) - ln(theme_len)`, in words.
    pub length_diff: f64,
    /// `animate(recipient) - animate(theme)`: -1, 0 or 1.
    pub animacy_diff: i8,
}

pub fn encode_features(pair: &AlternationPair) -> Result<Features, EvalError> {
    if pair.recipient_len == 0 || pair.theme_len == 0 {
        return Err(EvalError::ZeroLengthSpan);
    }
    Ok(Features {
        length_diff: (pair.recipient_len as f64).ln() - (pair.theme_len as f64).ln(),
        animacy_diff: i8::from(pair.recipient_animate) - i8::from(pair.theme_animate),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub pair_id: String,
    pub verb_lemma: String,
    pub score: f64,
    pub length_diff: f64,
    pub animacy_diff: i8,
    /// Identity of the backend that produced the log-probabilities.
    pub seed_label: String,
    pub attested: DativeForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub pair_id: String,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct Evaluation {
    pub records: Vec<PreferenceRecord>,
    pub failures: Vec<PairFailure>,
}

impl Evaluation {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn record(
    pair: &AlternationPair,
    do_: &ScoredSentence,
    po: &ScoredSentence,
    seed_label: &str,
) -> Result<PreferenceRecord, EvalError> {
    let f = encode_features(pair)?;
    Ok(PreferenceRecord {
        pair_id: pair.pair_id.clone(),
        verb_lemma: pair.verb_lemma.clone(),
        score: do_preference(do_, po)?,
        length_diff: f.length_diff,
        animacy_diff: f.animacy_diff,
        seed_label: seed_label.to_string(),
        attested: pair.attested,
    })
}

fn score_pairs(
    pairs: &[AlternationPair],
    backend: &dyn LogProbBackend,
) -> Result<Vec<ScoredSentence>, BackendError> {
    let texts: Vec<Vec<String>> = pairs
        .iter()
        .flat_map(|p| [p.do_sentence.clone(), p.po_sentence.clone()])
        .collect();
    let scored = backend.score_batch(&texts)?;
    if scored.len() != texts.len() {
        return Err(BackendError::Misaligned {
            expected: texts.len(),
            got: scored.len(),
        });
    }
    Ok(scored)
}

/// One batch; on a batch-level failure each pair is retried alone so the
/// failure is pinned to the pairs that caused it.
fn evaluate_batch(batch: &[AlternationPair], backend: &dyn LogProbBackend) -> Evaluation {
    let mut out = Evaluation::default();
    let push = |pair: &AlternationPair, s: &[ScoredSentence], out: &mut Evaluation| {
        match record(pair, &s[0], &s[1], backend.identity()) {
            Ok(r) => out.records.push(r),
            Err(e) => out.failures.push(PairFailure {
                pair_id: pair.pair_id.clone(),
                message: e.to_string(),
            }),
        }
    };
    match score_pairs(batch, backend) {
        Ok(scored) => {
            for (pair, s) in batch.iter().zip(scored.chunks(2)) {
                push(pair, s, &mut out);
            }
        }
        Err(_) if batch.len() > 1 => {
            for pair in batch {
                match score_pairs(std::slice::from_ref(pair), backend) {
                    Ok(s) => push(pair, &s, &mut out),
                    Err(e) => out.failures.push(PairFailure {
                        pair_id: pair.pair_id.clone(),
                        message: e.to_string(),
                    }),
                }
            }
        }
        Err(e) => out.failures.push(PairFailure {
            pair_id: batch[0].pair_id.clone(),
            message: e.to_string(),
        }),
    }
    out
}

/// Scores both realizations of every pair. Record order follows pair
/// order; batching and concurrency do not change the values.
pub fn evaluate_pairs(
    pairs: &[AlternationPair],
    backend: &dyn LogProbBackend,
    batch_size: usize,
) -> Evaluation {
    let batch_size = batch_size.max(1);
    let batches: Vec<&[AlternationPair]> = pairs.chunks(batch_size).collect();
    let results: Vec<Evaluation> = if backend.max_in_flight() > 1 && batches.len() > 1 {
        let workers = backend.max_in_flight().min(rayon::current_num_threads());
        let run = || {
            batches
                .par_iter()
                .map(|b| evaluate_batch(b, backend))
                .collect()
        };
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    } else {
        batches.iter().map(|b| evaluate_batch(b, backend)).collect()
    };
    let mut out = Evaluation::default();
    for r in results {
        out.records.extend(r.records);
        out.failures.extend(r.failures);
    }
    out
}

/// Geometric mean of per-sentence perplexities `exp(-logprob / len)`.
pub fn geo_mean_perplexity(scored: &[ScoredSentence]) -> Result<f64, EvalError> {
    if scored.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sum = 0.0;
    for s in scored {
        if s.token_count == 0 {
            return Err(EvalError::ZeroTokens);
        }
        sum += s.total_logprob / s.token_count as f64;
    }
    Ok((-sum / scored.len() as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{FileBackend, UniformBackend};

    fn s(lp: f64, n: usize) -> ScoredSentence {
        ScoredSentence {
            text: vec![],
            total_logprob: lp,
            token_count: n,
        }
    }

    fn words(x: &str) -> Vec<String> {
        x.split_whitespace().map(String::from).collect()
    }

    fn pair(id: &str, do_: &str, po: &str, r: usize, t: usize) -> AlternationPair {
        AlternationPair {
            pair_id: id.into(),
            do_sentence: words(do_),
            po_sentence: words(po),
            verb_lemma: "give".into(),
            attested: DativeForm::Do,
            theme_len: t,
            recipient_len: r,
            recipient_animate: true,
            theme_animate: false,
            recipient_pronoun: false,
            theme_pronoun: false,
            preposition: "to".into(),
            prep_fallback: false,
        }
    }

    #[test]
    fn preference_arithmetic() {
        assert_eq!(do_preference(&s(-10.0, 5), &s(-12.0, 6)).unwrap(), 0.0);
        let v = do_preference(&s(-9.0, 5), &s(-12.0, 6)).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        assert_eq!(do_preference(&s(-3.0, 0), &s(-1.0, 1)), Err(EvalError::ZeroTokens));
    }

    #[test]
    fn features() {
        let f = encode_features(&pair("p", "a", "b", 2, 8)).unwrap();
        assert!((f.length_diff - (0.25f64).ln()).abs() < 1e-15);
        assert!((f.length_diff + 1.386).abs() < 1e-3);
        assert_eq!(f.animacy_diff, 1);
        let f = encode_features(&pair("p", "a", "b", 2, 2)).unwrap();
        assert_eq!(f.length_diff, 0.0);
        assert_eq!(
            encode_features(&pair("p", "a", "b", 0, 2)),
            Err(EvalError::ZeroLengthSpan)
        );
    }

    #[test]
    fn table_backend_pair() {
        let p = pair("p1", "I gave him it", "I gave it to him", 1, 1);
        let b = FileBackend::from_entries(
            "tbl",
            [("I gave him it", -8.0, 4), ("I gave it to him", -15.0, 5)],
        );
        let e = evaluate_pairs(&[p], &b, 8);
        assert!(e.is_complete());
        // -8/4 - (-15/5) = -2 + 3
        assert!((e.records[0].score - 1.0).abs() < 1e-15);
        assert_eq!(e.records[0].seed_label, "tbl");
    }

    #[test]
    fn partial_failure_is_pinned() {
        let b = FileBackend::from_entries(
            "tbl",
            [("a b", -1.0, 2), ("a c d", -3.0, 3)],
        );
        let pairs = vec![pair("ok", "a b", "a c d", 1, 1), pair("bad", "x", "y z", 1, 1)];
        let e = evaluate_pairs(&pairs, &b, 2);
        assert_eq!(e.records.len(), 1);
        assert_eq!(e.failures.len(), 1);
        assert_eq!(e.failures[0].pair_id, "bad");
    }

    #[test]
    fn empty_pairs() {
        let e = evaluate_pairs(&[], &UniformBackend::new(-1.0), 4);
        assert!(e.records.is_empty() && e.failures.is_empty());
    }

    #[test]
    fn perplexity() {
        let p = geo_mean_perplexity(&[s(-(2f64.ln()) * 4.0, 4)]).unwrap();
        assert!((p - 2.0).abs() < 1e-12);
        let p = geo_mean_perplexity(&[s(-(2f64.ln()) * 3.0, 3), s(-(8f64.ln()) * 5.0, 5)]).unwrap();
        assert!((p - 4.0).abs() < 1e-12);
        assert_eq!(geo_mean_perplexity(&[s(0.0, 7)]).unwrap(), 1.0);
        assert_eq!(geo_mean_perplexity(&[]), Err(EvalError::Empty));
    }
}
