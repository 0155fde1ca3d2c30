//! Verb-class lexicon for strict dative detection and preposition choice.
//!
//! File format, one tab-separated verb per line, `#` comments allowed:
//!
//! ```text
//! lemma class alternates allowed_forms
//! give to-dative true DO,PO
//! bake benefactive true DO,PO
//! donate to-dative false PO
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::DativeForm;

/// Small curated lexicon covering common alternating and non-alternating verbs.
pub const DEFAULT_LEXICON: &str = include_str!("../data/verbs.tsv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerbClass {
    ToDative,
    Benefactive,
    Both,
}

impl VerbClass {
    pub fn licenses(self, preposition: &str) -> bool {
        matches!(
            (self, preposition),
            (VerbClass::Both, _) | (VerbClass::ToDative, "to") | (VerbClass::Benefactive, "for")
        )
    }
}

impl FromStr for VerbClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "to-dative" => Ok(VerbClass::ToDative),
            "benefactive" => Ok(VerbClass::Benefactive),
            "both" => Ok(VerbClass::Both),
            other => Err(format!("unknown verb class `{other}`")),
        }
    }
}

impl fmt::Display for VerbClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerbClass::ToDative => "to-dative",
            VerbClass::Benefactive => "benefactive",
            VerbClass::Both => "both",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbEntry {
    pub class: VerbClass,
    pub alternates: bool,
    pub allows_do: bool,
    pub allows_po: bool,
}

impl VerbEntry {
    pub fn allows(&self, form: DativeForm) -> bool {
        match form {
            DativeForm::Do => self.allows_do,
            DativeForm::Po => self.allows_po,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("lexicon line {line}: {message}")]
pub struct LexiconError {
    pub line: usize,
    pub message: String,
}

/// Read-only after load; lemmas are stored lowercase.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerbLexicon {
    entries: BTreeMap<String, VerbEntry>,
}

impl VerbLexicon {
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError {
                line: i + 1,
                message,
            };
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(err(format!("expected 4 columns, found {}", cols.len())));
            }
            let class = cols[1].parse().map_err(err)?;
            let alternates = match cols[2] {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => return Err(err(format!("bad alternates flag `{other}`"))),
            };
            let mut allows_do = false;
            let mut allows_po = false;
            for f in cols[3].split(',').map(str::trim) {
                match f {
                    "DO" => allows_do = true,
                    "PO" => allows_po = true,
                    other => return Err(err(format!("bad form `{other}`"))),
                }
            }
            if !allows_do && !allows_po {
                return Err(err("no allowed forms".into()));
            }
            entries.insert(
                cols[0].to_lowercase(),
                VerbEntry {
                    class,
                    alternates,
                    allows_do,
                    allows_po,
                },
            );
        }
        Ok(VerbLexicon { entries })
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    pub fn insert(&mut self, lemma: &str, entry: VerbEntry) {
        self.entries.insert(lemma.to_lowercase(), entry);
    }

    pub fn get(&self, lemma: &str) -> Option<&VerbEntry> {
        self.entries.get(lemma)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
