//! Correlation, standardization and fixed-effects least squares over
//! preference records.
//!
//! Sums run over sorted values where the result must not depend on input
//! order. Standard deviations use the n-1 denominator.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::PreferenceRecord;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("zero variance: correlation undefined")]
    ZeroVariance,
    #[error("design matrix is rank deficient: `{0}` is collinear with earlier columns")]
    RankDeficient(String),
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean 0, sample standard deviation 1.
pub fn zscore(v: &[f64]) -> Result<Vec<f64>, StatsError> {
    if v.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: v.len(),
        });
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    if var == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok(v.iter().map(|x| (x - m) / sd).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerbRow {
    pub verb: String,
    pub n_pairs: usize,
    pub model_mean: f64,
    pub judgment: f64,
    pub model_z: f64,
    pub judgment_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerbComparison {
    pub r: f64,
    pub n_verbs: usize,
    pub table: Vec<VerbRow>,
}

/// Per-verb mean score against per-verb judgments, both z-scored over the
/// verbs present in both.
pub fn verb_level_compare(
    records: &[PreferenceRecord],
    judgments: &HashMap<String, f64>,
) -> Result<VerbComparison, StatsError> {
    let mut by_verb: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in records {
        if judgments.contains_key(&r.verb_lemma) {
            by_verb.entry(&r.verb_lemma).or_default().push(r.score);
        }
    }
    if by_verb.len() < 2 {
        return Err(StatsError::TooFew {
            needed: 2,
            got: by_verb.len(),
        });
    }
    let mut verbs = Vec::with_capacity(by_verb.len());
    let mut means = Vec::with_capacity(by_verb.len());
    let mut counts = Vec::with_capacity(by_verb.len());
    for (verb, mut scores) in by_verb {
        scores.sort_by(f64::total_cmp);
        means.push(mean(&scores));
        counts.push(scores.len());
        verbs.push(verb.to_string());
    }
    let human: Vec<f64> = verbs.iter().map(|v| judgments[v]).collect();
    let mz = zscore(&means)?;
    let hz = zscore(&human)?;
    let r = pearson(&mz, &hz)?;
    let table = verbs
        .into_iter()
        .enumerate()
        .map(|(i, verb)| VerbRow {
            verb,
            n_pairs: counts[i],
            model_mean: means[i],
            judgment: human[i],
            model_z: mz[i],
            judgment_z: hz[i],
        })
        .collect();
    Ok(VerbComparison {
        r,
        n_verbs: hz.len(),
        table,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    LengthDiff,
    AnimacyDiff,
}

impl Predictor {
    pub fn name(self) -> &'static str {
        match self {
            Predictor::LengthDiff => "length_diff",
            Predictor::AnimacyDiff => "animacy_diff",
        }
    }

    fn value(self, r: &PreferenceRecord) -> f64 {
        match self {
            Predictor::LengthDiff => r.length_diff,
            Predictor::AnimacyDiff => f64::from(r.animacy_diff),
        }
    }
}

pub const INTERCEPT: &str = "intercept";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficients: BTreeMap<String, f64>,
    pub standard_errors: BTreeMap<String, f64>,
    pub r_squared: f64,
    pub n: usize,
}

/// Least squares with an intercept, via Householder QR.
pub fn fit_ols(names: &[&str], columns: &[Vec<f64>], y: &[f64]) -> Result<RegressionResult, StatsError> {
    let n = y.len();
    let p = columns.len() + 1;
    for c in columns {
        if c.len() != n {
            return Err(StatsError::LengthMismatch(c.len(), n));
        }
    }
    if n <= p {
        return Err(StatsError::TooFew { needed: p + 1, got: n });
    }
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let col_names: Vec<&str> = std::iter::once(INTERCEPT).chain(names.iter().copied()).collect();
    for j in 0..p {
        let norm = x.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= 1e-10 * norm {
            return Err(StatsError::RankDeficient(col_names[j].to_string()));
        }
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatsError::RankDeficient(col_names[p - 1].to_string()))?;
    let resid = &yv - &x * &beta;
    let ssr = resid.norm_squared();
    let my = mean(y);
    let sst: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let sigma2 = ssr / (n - p) as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| StatsError::RankDeficient(col_names[p - 1].to_string()))?;
    let cov = &r_inv * r_inv.transpose() * sigma2;
    let mut coefficients = BTreeMap::new();
    let mut standard_errors = BTreeMap::new();
    for (j, name) in col_names.iter().enumerate() {
        coefficients.insert(name.to_string(), beta[j]);
        standard_errors.insert(name.to_string(), cov[(j, j)].max(0.0).sqrt());
    }
    Ok(RegressionResult {
        coefficients,
        standard_errors,
        r_squared,
        n,
    })
}

/// `score ~ 1 + predictors`.
pub fn ols(records: &[PreferenceRecord], predictors: &[Predictor]) -> Result<RegressionResult, StatsError> {
    let names: Vec<&str> = predictors.iter().map(|p| p.name()).collect();
    let columns: Vec<Vec<f64>> = predictors
        .iter()
        .map(|p| records.iter().map(|r| p.value(r)).collect())
        .collect();
    let y: Vec<f64> = records.iter().map(|r| r.score).collect();
    fit_ols(&names, &columns, &y)
}
