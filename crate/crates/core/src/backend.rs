//! Log-probability backends.
//!
//! A backend scores whole sentences and returns the natural-log total and
//! the number of scored tokens. Three implementations ship here: a JSON-lines
//! lookup table, an HTTP client for a scoring service, and a uniform
//! per-token stub.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub text: Vec<String>,
    /// Natural-log total over the scored sequence.
    pub total_logprob: f64,
    /// Token count as reported by the backend.
    pub token_count: usize,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no score for `{0}`")]
    Missing(String),
    #[error("backend returned {got} scores for {expected} texts")]
    Misaligned { expected: usize, got: usize },
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("{path}:{line}: {message}")]
    Table {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Scores batches of whitespace-tokenized sentences. Output is aligned with
/// input and deterministic for a fixed `identity`.
pub trait LogProbBackend: Send + Sync {
    fn identity(&self) -> &str;

    fn score_batch(&self, texts: &[Vec<String>]) -> Result<Vec<ScoredSentence>, BackendError>;

    /// Upper bound on concurrent `score_batch` calls the backend tolerates.
    fn max_in_flight(&self) -> usize {
        1
    }
}

/// Base of the logarithms a backend reports; converted to natural log.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    E,
    Two,
    Ten,
}

impl LogBase {
    pub fn to_natural(self, value: f64) -> f64 {
        match self {
            LogBase::E => value,
            LogBase::Two => value * std::f64::consts::LN_2,
            LogBase::Ten => value * std::f64::consts::LN_10,
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e" | "ln" => Ok(LogBase::E),
            "2" => Ok(LogBase::Two),
            "10" => Ok(LogBase::Ten),
            other => Err(format!("unsupported log base `{other}`")),
        }
    }
}

pub fn join_text(tokens: &[String]) -> String {
    tokens.join(" ")
}

#[derive(Debug, Deserialize)]
struct TableRow {
    text: String,
    total_logprob: f64,
    token_count: usize,
}

/// Precomputed scores keyed by exact sentence text.
#[derive(Clone, Debug)]
pub struct FileBackend {
    identity: String,
    table: HashMap<String, (f64, usize)>,
}

impl FileBackend {
    pub fn open(path: &Path, base: LogBase) -> Result<Self, BackendError> {
        let reader = BufReader::new(File::open(path)?);
        let mut table = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: TableRow = serde_json::from_str(&line).map_err(|e| BackendError::Table {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
            table.insert(row.text, (base.to_natural(row.total_logprob), row.token_count));
        }
        Ok(FileBackend {
            identity: format!("file:{}", path.display()),
            table,
        })
    }

    pub fn from_entries<I, S>(identity: &str, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, f64, usize)>,
        S: Into<String>,
    {
        FileBackend {
            identity: identity.to_string(),
            table: entries
                .into_iter()
                .map(|(t, lp, n)| (t.into(), (lp, n)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl LogProbBackend for FileBackend {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score_batch(&self, texts: &[Vec<String>]) -> Result<Vec<ScoredSentence>, BackendError> {
        texts
            .iter()
            .map(|t| {
                let key = join_text(t);
                let &(total_logprob, token_count) =
                    self.table.get(&key).ok_or(BackendError::Missing(key))?;
                Ok(ScoredSentence {
                    text: t.clone(),
                    total_logprob,
                    token_count,
                })
            })
            .collect()
    }

    fn max_in_flight(&self) -> usize {
        usize::MAX
    }
}

/// Assigns the same log-probability to every whitespace token.
#[derive(Clone, Debug)]
pub struct UniformBackend {
    identity: String,
    per_token: f64,
}

impl UniformBackend {
    pub fn new(per_token: f64) -> Self {
        UniformBackend {
            identity: format!("uniform:{per_token}"),
            per_token,
        }
    }
}

impl LogProbBackend for UniformBackend {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score_batch(&self, texts: &[Vec<String>]) -> Result<Vec<ScoredSentence>, BackendError> {
        Ok(texts
            .iter()
            .map(|t| ScoredSentence {
                text: t.clone(),
                total_logprob: self.per_token * t.len() as f64,
                token_count: t.len(),
            })
            .collect())
    }

    fn max_in_flight(&self) -> usize {
        usize::MAX
    }
}

#[derive(Clone, Debug)]
pub struct HttpOptions {
    pub timeout: Duration,
    pub retries: u32,
    pub max_in_flight: usize,
    pub base: LogBase,
}

impl Default for HttpOptions {
    fn default() -> Self {
        HttpOptions {
            timeout: Duration::from_secs(60),
            retries: 2,
            max_in_flight: 1,
            base: LogBase::E,
        }
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<ScoreItem>,
}

#[derive(Deserialize)]
struct ScoreItem {
    total_logprob: f64,
    token_count: usize,
}

/// Client for a scoring service exposing `POST /score` and `GET /health`.
pub struct HttpBackend {
    base_url: String,
    identity: String,
    agent: ureq::Agent,
    options: HttpOptions,
}

impl HttpBackend {
    /// Connects and waits for `/health` to answer 200.
    pub fn connect(base_url: &str, options: HttpOptions) -> Result<Self, BackendError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(options.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let base_url = base_url.trim_end_matches('/').to_string();
        let backend = HttpBackend {
            identity: format!("http:{base_url}"),
            base_url,
            agent,
            options,
        };
        backend.health()?;
        Ok(backend)
    }

    pub fn health(&self) -> Result<(), BackendError> {
        let url = format!("{}/health", self.base_url);
        let resp = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| BackendError::Unreachable(e.to_string()))?;
        match resp.status().as_u16() {
            200 => Ok(()),
            code => Err(BackendError::Unreachable(format!("{url} answered {code}"))),
        }
    }

    fn post(&self, texts: &[String]) -> Result<Vec<ScoreItem>, BackendError> {
        let url = format!("{}/score", self.base_url);
        let mut resp = self
            .agent
            .post(&url)
            .send_json(ScoreRequest { texts })
            .map_err(|e| BackendError::Unreachable(e.to_string()))?;
        let code = resp.status().as_u16();
        if code != 200 {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            let err = format!("{url} answered {code}: {body}");
            return Err(if code >= 500 {
                BackendError::Unreachable(err)
            } else {
                BackendError::Protocol(err)
            });
        }
        let parsed: ScoreResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        Ok(parsed.scores)
    }
}

impl LogProbBackend for HttpBackend {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score_batch(&self, texts: &[Vec<String>]) -> Result<Vec<ScoredSentence>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let joined: Vec<String> = texts.iter().map(|t| join_text(t)).collect();
        let mut attempt = 0;
        let items = loop {
            match self.post(&joined) {
                Ok(items) => break items,
                Err(BackendError::Unreachable(_)) if attempt < self.options.retries => {
                    std::thread::sleep(Duration::from_millis(100 << attempt.min(6)));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        if items.len() != texts.len() {
            return Err(BackendError::Misaligned {
                expected: texts.len(),
                got: items.len(),
            });
        }
        Ok(texts
            .iter()
            .zip(items)
            .map(|(t, s)| ScoredSentence {
                text: t.clone(),
                total_logprob: self.options.base.to_natural(s.total_logprob),
                token_count: s.token_count,
            })
            .collect())
    }

    fn max_in_flight(&self) -> usize {
        self.options.max_in_flight.max(1)
    }
}
